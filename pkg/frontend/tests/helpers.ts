import { readFileSync } from "node:fs";

export function loadFixture<T>(relPath: string): T {
  return JSON.parse(loadFixtureText(relPath)) as T;
}

export function loadFixtureText(relPath: string): string {
  return readFileSync(new URL(`./fixtures/${relPath}`, import.meta.url), "utf-8");
}
