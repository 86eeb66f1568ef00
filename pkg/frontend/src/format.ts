// Display formatting for opaque payload numbers (unit conversion only).

const DASH = '—';

export function pct(value: number | null | undefined): string {
  if (value === null || value === undefined) return DASH;
  return `${(value * 100).toFixed(1)}%`;
}

export function num(value: number | null | undefined, digits = 3): string {
  if (value === null || value === undefined) return DASH;
  return value.toFixed(digits);
}
