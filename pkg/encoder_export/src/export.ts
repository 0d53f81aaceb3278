/**
 * Batch export: corpus JSONL in, mean-pooled embeddings out as EMBV1.
 * Row order always matches corpus line order; re-running with the same
 * inputs and model produces an identical file.
 */

import { writeEmbv1 } from './embv1.js';
import { readCorpus } from './corpus.js';
import { loadEncoder } from './encoder.js';
import { meanPool } from './pooling.js';

export interface ExportJob {
  model: string;
  corpusPath: string;
  outPath: string;
  maxLength: number;
  batchSize: number;
}

export interface ExportSummary {
  model: string;
  dim: number;
  rows: number;
  truncated: number;
  outPath: string;
}

export function validateJob(job: ExportJob): void {
  if (!Number.isInteger(job.maxLength) || job.maxLength < 1) {
    throw new Error(`maxLength must be a positive integer, got ${job.maxLength}`);
  }
  if (!Number.isInteger(job.batchSize) || job.batchSize < 1) {
    throw new Error(`batchSize must be a positive integer, got ${job.batchSize}`);
  }
  if (!job.model) throw new Error('model id must be non-empty');
}

export async function runExport(
  job: ExportJob,
  warn: (msg: string) => void = (msg) => console.warn(msg),
): Promise<ExportSummary> {
  validateJob(job);
  const corpus = readCorpus(job.corpusPath);
  const encoder = await loadEncoder(job.model);

  const ids: string[] = [];
  const vectors: Float32Array[] = [];
  let truncated = 0;
  for (let start = 0; start < corpus.length; start += job.batchSize) {
    const batch = corpus.slice(start, start + job.batchSize);
    const states = await encoder.encode(
      batch.map((e) => e.text),
      job.maxLength,
    );
    if (states.length !== batch.length) {
      throw new Error(`encoder returned ${states.length} states for ${batch.length} texts`);
    }
    for (let i = 0; i < batch.length; i++) {
      if (states[i].truncated) {
        truncated++;
        warn(
          `warning: text for id ${JSON.stringify(batch[i].id)} exceeds ` +
            `${job.maxLength} tokens; truncated`,
        );
      }
      ids.push(batch[i].id);
      vectors.push(meanPool(states[i]));
    }
  }

  writeEmbv1({ dim: encoder.dim, ids, vectors }, job.outPath);
  return {
    model: encoder.modelId,
    dim: encoder.dim,
    rows: ids.length,
    truncated,
    outPath: job.outPath,
  };
}
