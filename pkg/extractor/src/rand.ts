/**
 * Deterministic per-sample randomness.
 *
 * Every Monte Carlo draw site is seeded by a hash of (global seed,
 * sample id, draw index), so a sample's draws do not depend on its
 * position in the dataset and reruns are byte-identical.  Normals use the
 * Box-Muller cosine branch with a fixed two-uniforms-per-normal
 * consumption.
 */

export function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

export function drawSeed(seed: number, sampleId: string, drawIndex: number): number {
  return fnv1a(`${seed}${sampleId}${drawIndex}`);
}

/** mulberry32: small, fast, and good enough for seeding MC estimates. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function standardNormals(seed: number, count: number): number[] {
  const next = mulberry32(seed);
  const out = new Array<number>(count);
  for (let i = 0; i < count; i++) {
    const u1 = next() + 1e-12; // keep log() finite
    const u2 = next();
    out[i] = Math.sqrt(-2 * Math.log(u1)) * Math.cos(2 * Math.PI * u2);
  }
  return out;
}
