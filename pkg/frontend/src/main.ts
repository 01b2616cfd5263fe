/**
 * rieszlab-render: turn rieszlab CSV reports into figures.
 *
 *   render --kind KIND --in report.csv [--in more.csv] --out fig.png
 *          [--svg fig.svg] [--style style.json]
 *
 * Kinds: ratio_sweep | energy_trajectory | rate_loglog | symbol_check.
 * Rendering is pure: the same CSV and style produce byte-identical output.
 * Exit codes mirror the producing CLI: 0 success, 1 usage/schema error.
 */

import * as fs from "fs";
import * as path from "path";

import { readCsv, validateSchema, SchemaError, Table } from "./csv";
import { DEFAULT_STYLE, RENDERERS, Style } from "./figures";
import { encodePng } from "./png";

interface Args {
  kind: string;
  inputs: string[];
  out: string;
  svg?: string;
  style?: string;
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== "render") {
    throw new SchemaError(`unknown command '${argv[0] ?? ""}'; expected 'render'`);
  }
  const args: Args = { kind: "", inputs: [], out: "" };
  for (let i = 1; i < argv.length; i++) {
    const flag = argv[i];
    const val = argv[i + 1];
    switch (flag) {
      case "--kind":
        args.kind = val;
        i++;
        break;
      case "--in":
        args.inputs.push(val);
        i++;
        break;
      case "--out":
        args.out = val;
        i++;
        break;
      case "--svg":
        args.svg = val;
        i++;
        break;
      case "--style":
        args.style = val;
        i++;
        break;
      default:
        throw new SchemaError(`unknown flag '${flag}'`);
    }
  }
  if (!args.kind || args.inputs.length === 0 || !args.out) {
    throw new SchemaError("render needs --kind, at least one --in, and --out");
  }
  return args;
}

function loadStyle(p?: string): Style {
  if (!p) return DEFAULT_STYLE;
  const doc = JSON.parse(fs.readFileSync(p, "utf8"));
  return { ...DEFAULT_STYLE, ...doc };
}

export function run(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
    const style = loadStyle(args.style);
    const tables: Table[] = args.inputs.map((p) => {
      const t = readCsv(p);
      validateSchema(args.kind, t, p);
      return t;
    });
    const canvas = RENDERERS[args.kind](tables, style);
    const png = encodePng(canvas.width, canvas.height, canvas.pixels);
    fs.mkdirSync(path.dirname(path.resolve(args.out)), { recursive: true });
    fs.writeFileSync(args.out, png);
    const svgPath = args.svg ?? args.out.replace(/\.png$/, ".svg");
    fs.writeFileSync(svgPath, canvas.toSvg());
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
