"""How much smaller the dyadic kernel is near the origin than at |y| ~ 1/delta (n = 2)."""
import numpy as np

from strichartz_lab.duhamel import kernel_K_delta
from strichartz_lab.spectral import default_bump


def peak(y, delta, bump):
    s = np.linspace(1 / (2 * delta), 2 / delta, 1201)
    return np.abs(kernel_K_delta(np.array([y, 0.0]), s, delta, bump=bump)).max()


def main():
    bump = default_bump()
    print(f"{'delta':>10s} {'far/near':>12s}")
    for k in range(1, 10):
        d = 2.0 ** -k
        print(f"{d:10.6f} {peak(1 / d, d, bump) / peak(1 / (200 * d), d, bump):12.2f}")


if __name__ == "__main__":
    main()
