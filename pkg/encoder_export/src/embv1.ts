/**
 * EMBV1 binary format, bit-compatible with the primary toolkit's loader.
 *
 * Layout (little-endian):
 *   bytes 0-5    magic "EMBV1\0"
 *   bytes 6-9    u32 row count
 *   bytes 10-13  u32 vector dimension
 *   bytes 14-21  u64 byte length L of the id block
 *   next L bytes UTF-8 ids joined by "\n" (no trailing newline)
 *   rest         count * dim float32 values, row-major
 */

import { writeFileSync } from 'node:fs';

const MAGIC = Buffer.from('EMBV1\0', 'latin1');
const HEADER_SIZE = 22;

export interface EmbeddingTable {
  dim: number;
  ids: string[];
  /** one Float32Array of length dim per id, same order */
  vectors: Float32Array[];
}

export function validateTable(table: EmbeddingTable): void {
  const { dim, ids, vectors } = table;
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`dim must be a positive integer, got ${dim}`);
  }
  if (ids.length === 0) {
    throw new Error('cannot serialize an empty embedding table (EMBV1 forbids count=0)');
  }
  if (ids.length !== vectors.length) {
    throw new Error(`${ids.length} ids but ${vectors.length} vectors`);
  }
  const seen = new Set<string>();
  for (const id of ids) {
    if (!id) throw new Error('ids must be non-empty strings');
    if (id.includes('\n')) throw new Error(`id ${JSON.stringify(id)} contains a newline`);
    if (seen.has(id)) throw new Error(`duplicate id ${JSON.stringify(id)}`);
    seen.add(id);
  }
  for (let r = 0; r < vectors.length; r++) {
    if (vectors[r].length !== dim) {
      throw new Error(`row ${r} has length ${vectors[r].length}, expected ${dim}`);
    }
    for (const v of vectors[r]) {
      if (!Number.isFinite(v)) throw new Error(`row ${r} contains a non-finite value`);
    }
  }
}

export function encodeEmbv1(table: EmbeddingTable): Buffer {
  validateTable(table);
  const { dim, ids, vectors } = table;
  const idBlock = Buffer.from(ids.join('\n'), 'utf-8');
  const header = Buffer.alloc(HEADER_SIZE);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(ids.length, 6);
  header.writeUInt32LE(dim, 10);
  header.writeBigUInt64LE(BigInt(idBlock.length), 14);
  const payload = Buffer.alloc(ids.length * dim * 4);
  for (let r = 0; r < vectors.length; r++) {
    for (let j = 0; j < dim; j++) {
      payload.writeFloatLE(vectors[r][j], (r * dim + j) * 4);
    }
  }
  return Buffer.concat([header, idBlock, payload]);
}

export function writeEmbv1(table: EmbeddingTable, path: string): void {
  writeFileSync(path, encodeEmbv1(table));
}

/** Parse EMBV1 bytes back into a table (used by tests and sanity checks). */
export function decodeEmbv1(data: Buffer): EmbeddingTable {
  if (data.length < HEADER_SIZE) {
    throw new Error(`truncated EMBV1 header (${data.length} bytes)`);
  }
  if (!data.subarray(0, 6).equals(MAGIC)) {
    throw new Error('bad EMBV1 magic');
  }
  const count = data.readUInt32LE(6);
  const dim = data.readUInt32LE(10);
  const idLen = Number(data.readBigUInt64LE(14));
  if (count === 0 || dim === 0) throw new Error('count and dim must be nonzero');
  const expected = HEADER_SIZE + idLen + count * dim * 4;
  if (data.length !== expected) {
    throw new Error(`expected ${expected} bytes, found ${data.length}`);
  }
  const ids = data.subarray(HEADER_SIZE, HEADER_SIZE + idLen).toString('utf-8').split('\n');
  if (ids.length !== count) {
    throw new Error(`header says ${count} ids, id block holds ${ids.length}`);
  }
  const vectors: Float32Array[] = [];
  let offset = HEADER_SIZE + idLen;
  for (let r = 0; r < count; r++) {
    const row = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      row[j] = data.readFloatLE(offset);
      offset += 4;
    }
    vectors.push(row);
  }
  return { dim, ids, vectors };
}
