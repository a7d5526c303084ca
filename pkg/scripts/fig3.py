"""NIBA memory kernels at alpha = 0.05 for several exponents s."""

from _common import figure, load, parse_args, point_dirs, run


def main():
    args = parse_args("fig3")
    cfg, out = run(args)
    plt = figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    for s, d in point_dirs(cfg, out):
        data = load(d / f"K_niba_s{s:g}.csv")
        if data is not None:
            ax.plot(data["t"], data["K_niba"], label=f"s = {s:g}")
    ax.axhline(0, color="0.6", lw=0.8)
    ax.set(xlabel="t", ylabel="K(t)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "fig3.png", dpi=150)
    print(out / "fig3.png")


if __name__ == "__main__":
    main()
