/**
 * Encoder backends producing token-level hidden states for pooling.
 *
 * - "test:<dim>" model ids select a deterministic offline encoder (hashed
 *   whitespace tokens), useful for tests and for environments where model
 *   weights cannot be fetched.  Default dim is 768, matching the usual
 *   transformer hidden size.
 * - any other model id loads a pretrained encoder via transformers.js in
 *   inference mode; weights come from the Hugging Face cache or hub.
 */

import type { TokenStates } from './pooling.js';

export interface Encoder {
  readonly dim: number;
  readonly modelId: string;
  /** token states per text, order-preserving */
  encode(texts: string[], maxLength: number): Promise<TokenStates[]>;
}

export async function loadEncoder(modelId: string): Promise<Encoder> {
  if (modelId === 'test' || modelId.startsWith('test:')) {
    return new TestEncoder(modelId);
  }
  return TransformersEncoder.load(modelId);
}

// ----------------------------------------------------------- test backend

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/** mulberry32: tiny deterministic PRNG, plenty for synthetic token states */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export class TestEncoder implements Encoder {
  readonly dim: number;
  readonly modelId: string;

  constructor(modelId: string) {
    this.modelId = modelId;
    const spec = modelId === 'test' ? '768' : modelId.slice('test:'.length);
    const dim = Number(spec);
    if (!Number.isInteger(dim) || dim < 1) {
      throw new Error(`bad test encoder id ${JSON.stringify(modelId)}; use test:<dim>`);
    }
    this.dim = dim;
  }

  private tokenVector(token: string): Float32Array {
    const next = mulberry32(fnv1a(token));
    const out = new Float32Array(this.dim);
    for (let j = 0; j < this.dim; j++) out[j] = 2 * next() - 1;
    return out;
  }

  async encode(texts: string[], maxLength: number): Promise<TokenStates[]> {
    return texts.map((text) => {
      const words = text.split(/\s+/).filter(Boolean);
      const tokens = words.length > 0 ? words : [''];
      const truncated = tokens.length > maxLength;
      const kept = truncated ? tokens.slice(0, maxLength) : tokens;
      return {
        hidden: kept.map((t) => this.tokenVector(t)),
        mask: new Uint8Array(kept.length).fill(1),
        truncated,
      };
    });
  }
}

// ---------------------------------------------------- transformers backend

const TRANSFORMERS_MODULE = '@huggingface/transformers';

interface HfTensor {
  data: Float32Array | number[] | BigInt64Array;
  dims: number[];
}

export class TransformersEncoder implements Encoder {
  readonly dim: number;
  readonly modelId: string;
  private readonly tokenizer: any;
  private readonly model: any;

  private constructor(modelId: string, tokenizer: any, model: any, dim: number) {
    this.modelId = modelId;
    this.tokenizer = tokenizer;
    this.model = model;
    this.dim = dim;
  }

  static async load(modelId: string): Promise<TransformersEncoder> {
    let transformers: any;
    try {
      transformers = await import(TRANSFORMERS_MODULE);
    } catch (e) {
      throw new Error(
        `transformers.js backend unavailable (install ${TRANSFORMERS_MODULE}, ` +
          `or use a test:<dim> model id): ${(e as Error).message}`,
      );
    }
    let tokenizer: any;
    let model: any;
    try {
      tokenizer = await transformers.AutoTokenizer.from_pretrained(modelId);
      model = await transformers.AutoModel.from_pretrained(modelId, { dtype: 'fp32' });
    } catch (e) {
      throw new Error(`cannot load model ${JSON.stringify(modelId)}: ${(e as Error).message}`);
    }
    const dim = model?.config?.hidden_size;
    if (!Number.isInteger(dim) || dim < 1) {
      throw new Error(`model ${JSON.stringify(modelId)} reports no hidden_size`);
    }
    return new TransformersEncoder(modelId, tokenizer, model, dim);
  }

  private async tokenCount(text: string): Promise<number> {
    const single = await this.tokenizer(text, { truncation: false });
    const ids = single.input_ids as HfTensor;
    return ids.dims[ids.dims.length - 1];
  }

  async encode(texts: string[], maxLength: number): Promise<TokenStates[]> {
    const inputs = await this.tokenizer(texts, {
      padding: true,
      truncation: true,
      max_length: maxLength,
    });
    const output = await this.model(inputs);
    const hiddenTensor = (output.last_hidden_state ?? output.logits) as HfTensor;
    const [batch, seq, dim] = hiddenTensor.dims;
    if (dim !== this.dim) {
      throw new Error(`model emitted dim ${dim}, expected ${this.dim}`);
    }
    const data = hiddenTensor.data as Float32Array;
    const maskTensor = inputs.attention_mask as HfTensor;
    const maskData = maskTensor.data;

    const out: TokenStates[] = [];
    for (let b = 0; b < batch; b++) {
      const hidden: Float32Array[] = [];
      const mask = new Uint8Array(seq);
      for (let t = 0; t < seq; t++) {
        const start = (b * seq + t) * dim;
        hidden.push(data.slice(start, start + dim) as Float32Array);
        mask[t] = Number(maskData[b * seq + t]) ? 1 : 0;
      }
      out.push({
        hidden,
        mask,
        truncated: (await this.tokenCount(texts[b])) > maxLength,
      });
    }
    return out;
  }
}
