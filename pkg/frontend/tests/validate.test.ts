// Contract test: the client-side validator must accept exactly the set
// of scripts the service accepts.  The fixture file is shared with the
// service's test suite, which replays the same cases over HTTP.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { validateScript } from "../src/validate.js";

interface FixtureCase {
  name: string;
  script: unknown;
  valid: boolean;
  reason?: string;
}

const fixturesPath = join(
  dirname(fileURLToPath(import.meta.url)),
  "..",
  "fixtures",
  "curve_validation.json",
);
const cases = (JSON.parse(readFileSync(fixturesPath, "utf-8")) as { cases: FixtureCase[] })
  .cases;

describe("shared curve-validation fixtures", () => {
  it("has both accepting and rejecting cases", () => {
    expect(cases.some((c) => c.valid)).toBe(true);
    expect(cases.some((c) => !c.valid)).toBe(true);
  });

  for (const fixture of cases) {
    it(`${fixture.name} is ${fixture.valid ? "accepted" : "rejected"}`, () => {
      const errors = validateScript(fixture.script);
      if (fixture.valid) {
        expect(errors).toEqual([]);
      } else {
        expect(errors.length).toBeGreaterThan(0);
      }
    });
  }
});
