"""Which named corner points admit a temporal exponent pair, for n = 3..8."""
from strichartz_lab.exponent_geometry import feasible_q_interval, fmt_rational, vertices


def main():
    for n in range(3, 9):
        cells = []
        for name, p in vertices(n).items():
            iv = feasible_q_interval(n, p)
            cells.append(f"{name}:{'-' if iv.empty else fmt_rational(iv.lo) + '..' + fmt_rational(iv.hi)}")
        print(f"n={n}  " + "  ".join(cells))


if __name__ == "__main__":
    main()
