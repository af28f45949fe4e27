// Display rounding: every number shown in a panel goes through formatSig so
// rendered text always equals the service value at 4 significant digits.

export const DISPLAY_DIGITS = 4;

export function formatSig(value: number, digits: number = DISPLAY_DIGITS): string {
  if (!Number.isFinite(value)) {
    return String(value);
  }
  if (value === 0) {
    return "0";
  }
  // toPrecision rounds to significant digits; Number() strips trailing
  // zeros and normalizes exponent notation for moderate magnitudes.
  return String(Number(value.toPrecision(digits)));
}

export function formatKey(key: { region: string; output: string; year: number }): string {
  return `${key.region}:${key.output}@${key.year}`;
}
