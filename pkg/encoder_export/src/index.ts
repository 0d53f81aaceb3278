export { encodeEmbv1, decodeEmbv1, writeEmbv1, validateTable } from './embv1.js';
export type { EmbeddingTable } from './embv1.js';
export { parseCorpus, readCorpus } from './corpus.js';
export type { CorpusEntry } from './corpus.js';
export { meanPool } from './pooling.js';
export type { TokenStates } from './pooling.js';
export { loadEncoder, TestEncoder, TransformersEncoder } from './encoder.js';
export type { Encoder } from './encoder.js';
export { runExport, validateJob } from './export.js';
export type { ExportJob, ExportSummary } from './export.js';
