#!/usr/bin/env node

/**
 * Standalone exporter CLI.
 *
 *   encoder-export --corpus corpus.jsonl --out embeddings.emb \
 *       --model Xenova/codebert-base [--max-length 512] [--batch-size 8]
 *
 * A JSON summary goes to stdout; progress and warnings go to stderr.
 * Use --model test:<dim> for the deterministic offline encoder.
 */

import { parseArgs } from 'node:util';
import { pathToFileURL } from 'node:url';

import { runExport, type ExportJob } from './export.js';

export function parseCliArgs(argv: string[]): ExportJob {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: 'string' },
      corpus: { type: 'string' },
      out: { type: 'string' },
      'max-length': { type: 'string', default: '512' },
      'batch-size': { type: 'string', default: '8' },
    },
    strict: true,
  });
  for (const required of ['model', 'corpus', 'out'] as const) {
    if (!values[required]) throw new Error(`--${required} is required`);
  }
  const maxLength = Number(values['max-length']);
  const batchSize = Number(values['batch-size']);
  return {
    model: values.model as string,
    corpusPath: values.corpus as string,
    outPath: values.out as string,
    maxLength,
    batchSize,
  };
}

export async function main(argv: string[]): Promise<number> {
  let job: ExportJob;
  try {
    job = parseCliArgs(argv);
  } catch (e) {
    console.error(`encoder-export: ${(e as Error).message}`);
    return 1;
  }
  try {
    const summary = await runExport(job, (msg) => console.error(msg));
    console.error(
      `exported ${summary.rows} rows (dim ${summary.dim}, ` +
        `${summary.truncated} truncated) to ${summary.outPath}`,
    );
    console.log(JSON.stringify(summary, null, 2));
    return 0;
  } catch (e) {
    console.error(`encoder-export: ${(e as Error).message}`);
    return 2;
  }
}

const isDirectRun =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;
if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
