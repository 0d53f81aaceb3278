/**
 * JSON-lines corpus reader: one {"id": str, "text": str} object per line.
 * Line order is preserved exactly; it becomes the row order of the export.
 */

import { readFileSync } from 'node:fs';

export interface CorpusEntry {
  id: string;
  text: string;
}

export function parseCorpus(content: string, source = 'corpus'): CorpusEntry[] {
  const entries: CorpusEntry[] = [];
  const seen = new Set<string>();
  const lines = content.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (e) {
      throw new Error(`${source}:${i + 1}: invalid JSON: ${(e as Error).message}`);
    }
    const { id, text } = obj as { id?: unknown; text?: unknown };
    if (typeof id !== 'string' || !id) {
      throw new Error(`${source}:${i + 1}: "id" must be a non-empty string`);
    }
    if (typeof text !== 'string') {
      throw new Error(`${source}:${i + 1}: "text" must be a string`);
    }
    if (seen.has(id)) {
      throw new Error(`${source}:${i + 1}: duplicate id ${JSON.stringify(id)}`);
    }
    seen.add(id);
    entries.push({ id, text });
  }
  if (entries.length === 0) {
    throw new Error(`${source}: corpus is empty`);
  }
  return entries;
}

export function readCorpus(path: string): CorpusEntry[] {
  return parseCorpus(readFileSync(path, 'utf-8'), path);
}
