/** Linear screen-data mapping for one plot axis. */

export class LinearScale {
  constructor(
    public domainLo: number,
    public domainHi: number,
    public rangeLo: number,
    public rangeHi: number,
  ) {}

  toScreen(v: number): number {
    const span = this.domainHi - this.domainLo;
    const t = span === 0 ? 0.5 : (v - this.domainLo) / span;
    return this.rangeLo + t * (this.rangeHi - this.rangeLo);
  }

  toData(s: number): number {
    const span = this.rangeHi - this.rangeLo;
    const t = span === 0 ? 0.5 : (s - this.rangeLo) / span;
    return this.domainLo + t * (this.domainHi - this.domainLo);
  }
}

export function extent(values: number[]): [number, number] {
  if (values.length === 0) return [0, 1];
  let lo = values[0];
  let hi = values[0];
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) {
    // degenerate column: pad so points stay drawable
    return [lo - 0.5, hi + 0.5];
  }
  return [lo, hi];
}
