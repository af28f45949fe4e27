import { describe, expect, it } from "vitest";

import { formatKey, formatSig } from "../src/format.js";

describe("formatSig", () => {
  it("rounds to four significant digits", () => {
    expect(formatSig(1234.567)).toBe("1235");
    expect(formatSig(32010.111285206833)).toBe("32010");
    expect(formatSig(0.0012344)).toBe("0.001234");
    expect(formatSig(0.55)).toBe("0.55");
    expect(formatSig(-68.0449)).toBe("-68.04");
  });

  it("keeps exact values exact", () => {
    expect(formatSig(0)).toBe("0");
    expect(formatSig(1)).toBe("1");
    expect(formatSig(0.25)).toBe("0.25");
    expect(formatSig(2030)).toBe("2030");
  });

  it("normalizes exponent notation through Number round-trip", () => {
    expect(formatSig(123456789)).toBe("123500000");
    expect(formatSig(1.234567e-8)).toBe("1.235e-8");
  });

  it("passes non-finite values through", () => {
    expect(formatSig(Number.NaN)).toBe("NaN");
    expect(formatSig(Number.POSITIVE_INFINITY)).toBe("Infinity");
  });
});

describe("formatKey", () => {
  it("joins region, output, and year", () => {
    expect(formatKey({ region: "global", output: "emissions_Mt", year: 2050 })).toBe(
      "global:emissions_Mt@2050",
    );
  });
});
