"""Memory kernels extracted from FP-HEOM populations, next to NIBA, at alpha = 0.05."""

from _common import figure, load, parse_args, point_dirs, run


def main():
    args = parse_args("fig4")
    cfg, out = run(args)
    plt = figure()
    points = point_dirs(cfg, out)
    fig, axes = plt.subplots(1, len(points), figsize=(4 * len(points), 3.5), squeeze=False)
    for ax, (s, d) in zip(axes[0], points):
        exact = load(d / f"K_exact_s{s:g}.csv")
        niba = load(d / f"K_niba_s{s:g}.csv")
        if exact is not None:
            ax.plot(exact["t"], exact["K"], label="FP-HEOM")
        if niba is not None:
            ax.plot(niba["t"], niba["K_niba"], "--", label="NIBA")
        ax.axhline(0, color="0.6", lw=0.8)
        ax.set(title=f"s = {s:g}", xlabel="t")
    axes[0][0].set_ylabel("K(t)")
    axes[0][0].legend()
    fig.tight_layout()
    fig.savefig(out / "fig4.png", dpi=150)
    print(out / "fig4.png")


if __name__ == "__main__":
    main()
