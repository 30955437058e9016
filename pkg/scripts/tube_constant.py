"""Tabulate delta * min |U(F)| and the tube quotient across dyadic delta."""
import argparse

from strichartz_lab.counterexamples import TubeParams, predicted_exponents, tube_measure
from strichartz_lab.exponent_geometry import ExponentConfig
from strichartz_lab.fitting import fit_slope


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--point", nargs=2, default=["1", "0"])
    ap.add_argument("--inv-q", default="1/4")
    ap.add_argument("--inv-qt-prime", default="1")
    ap.add_argument("--kmax", type=int, default=4)
    args = ap.parse_args()
    c = ExponentConfig.of(1, *args.point, args.inv_q, args.inv_qt_prime)
    rows = []
    for k in range(1, args.kmax + 1):
        m = tube_measure(TubeParams(2.0 ** -k, c))
        rows.append(m)
        print(f"delta={m.delta:<8g} delta*min|U|={m.min_abs_scaled:.4f} quotient={m.quotient:.4e} "
              f"phase={m.phase_bound:.3f}")
    slope, err = fit_slope([(m.delta, m.quotient) for m in rows])
    pred = float(predicted_exponents("TUBE", c).e_quotient)
    print(f"slope {slope:.3f} +- {err:.3f}, predicted {pred:.3f}")


if __name__ == "__main__":
    main()
