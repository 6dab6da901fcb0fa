/**
 * Float formatting matching the core's schedule/program text convention
 * (C-style %.17g): 17 significant digits, trailing zeros trimmed, exponent
 * form outside [1e-4, 1e17) with a sign and at least two exponent digits.
 */
export function g17(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot serialize non-finite value ${x}`);
  }
  if (x === 0) {
    return Object.is(x, -0) ? "-0" : "0";
  }
  const neg = x < 0;
  const exp = x.toExponential(16); // d.dddddddddddddddde±k
  const [mantissaRaw, expRaw] = exp.split("e");
  const e = parseInt(expRaw, 10);
  let digits = mantissaRaw.replace("-", "").replace(".", ""); // 17 digits

  let body: string;
  if (e >= -4 && e < 17) {
    if (e >= 0) {
      const intPart = digits.slice(0, e + 1);
      const fracPart = trimZeros(digits.slice(e + 1));
      body = fracPart ? `${intPart}.${fracPart}` : intPart;
    } else {
      body = `0.${"0".repeat(-e - 1)}${trimZeros(digits)}`;
    }
  } else {
    const frac = trimZeros(digits.slice(1));
    const mant = frac ? `${digits[0]}.${frac}` : digits[0];
    const sign = e < 0 ? "-" : "+";
    const mag = Math.abs(e).toString().padStart(2, "0");
    body = `${mant}e${sign}${mag}`;
  }
  return neg ? `-${body}` : body;
}

function trimZeros(s: string): string {
  return s.replace(/0+$/, "");
}
