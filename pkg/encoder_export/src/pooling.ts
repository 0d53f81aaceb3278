/**
 * Mean pooling of token hidden states over the real (non-padding) span.
 *
 * Padding positions are excluded from the mean: including them would make a
 * text's embedding depend on how much padding its batch happened to carry.
 */

export interface TokenStates {
  /** hidden[t] is the d-dimensional state of token position t */
  hidden: Float32Array[];
  /** 1 for real tokens, 0 for padding; same length as hidden */
  mask: Uint8Array;
  /** whether the original text was cut to fit the length budget */
  truncated: boolean;
}

export function meanPool(states: TokenStates): Float32Array {
  const { hidden, mask } = states;
  if (hidden.length === 0) throw new Error('no token states to pool');
  if (mask.length !== hidden.length) {
    throw new Error(`mask length ${mask.length} != ${hidden.length} token positions`);
  }
  const dim = hidden[0].length;
  const sum = new Float64Array(dim);
  let realTokens = 0;
  for (let t = 0; t < hidden.length; t++) {
    if (!mask[t]) continue;
    if (hidden[t].length !== dim) {
      throw new Error(`token ${t} has dim ${hidden[t].length}, expected ${dim}`);
    }
    for (let j = 0; j < dim; j++) sum[j] += hidden[t][j];
    realTokens++;
  }
  if (realTokens === 0) throw new Error('attention mask selects no tokens');
  const out = new Float32Array(dim);
  for (let j = 0; j < dim; j++) out[j] = sum[j] / realTokens;
  return out;
}
