import { describe, expect, it } from "vitest";

import { ManifestError, parseManifest } from "../src/manifest.js";

function minimal(): object {
  return {
    schema_version: 1,
    rng_algorithm: "PCG64",
    figures: {
      "2": {
        x_label: "t",
        y_label: "deficit",
        x_scale: "linear",
        y_scale: "log",
        curves: [{ csv: "a.csv", label: "a" }],
        fits: [
          {
            label: "fit",
            model: "exponential",
            rate_lambda: 1.2,
            prefactor_epsilon: 0.9,
            plateau: 0.1,
            window: [0.2, 0.8],
          },
        ],
      },
    },
  };
}

describe("figure manifest validation", () => {
  it("accepts a minimal valid manifest", () => {
    const m = parseManifest("m.json", JSON.stringify(minimal()));
    expect(Object.keys(m.figures)).toEqual(["2"]);
    expect(m.figures["2"].fits[0].rate_lambda).toBe(1.2);
  });

  it("rejects invalid JSON, naming the file", () => {
    expect(() => parseManifest("m.json", "{nope")).toThrowError(/m\.json/);
  });

  it("rejects unknown figure ids", () => {
    const bad = minimal() as { figures: Record<string, unknown> };
    bad.figures["7"] = bad.figures["2"];
    expect(() => parseManifest("m.json", JSON.stringify(bad))).toThrowError(
      /unknown figure id '7'/,
    );
  });

  it("rejects unknown fit models", () => {
    const bad = JSON.parse(JSON.stringify(minimal()));
    bad.figures["2"].fits[0].model = "cubic";
    expect(() => parseManifest("m.json", JSON.stringify(bad))).toThrowError(
      ManifestError,
    );
  });

  it("rejects curves without a csv path", () => {
    const bad = JSON.parse(JSON.stringify(minimal()));
    bad.figures["2"].curves[0].csv = "";
    expect(() => parseManifest("m.json", JSON.stringify(bad))).toThrowError(
      ManifestError,
    );
  });

  it("rejects malformed fit windows", () => {
    const bad = JSON.parse(JSON.stringify(minimal()));
    bad.figures["2"].fits[0].window = [0.2];
    expect(() => parseManifest("m.json", JSON.stringify(bad))).toThrowError(
      /window/,
    );
  });

  it("rejects bad axis scales", () => {
    const bad = JSON.parse(JSON.stringify(minimal()));
    bad.figures["2"].y_scale = "sqrt";
    expect(() => parseManifest("m.json", JSON.stringify(bad))).toThrowError(
      /scale/,
    );
  });
});
