"""P(t) at alpha = 0.05: highest tier against Redfield-plus for each exponent s."""

from _common import figure, load, parse_args, point_dirs, run


def main():
    args = parse_args("fig2")
    cfg, out = run(args)
    L = max(cfg.run.L)
    plt = figure()
    points = point_dirs(cfg, out)
    fig, axes = plt.subplots(1, len(points), figsize=(4 * len(points), 3.5), sharey=True, squeeze=False)
    for ax, (s, d) in zip(axes[0], points):
        for name, label, style in ((f"P_heom_L{L}.csv", f"FP-HEOM L={L}", "-"),
                                   ("P_redfield_plus.csv", "Redfield-plus", "--"),
                                   ("P_redfield.csv", "Redfield", ":")):
            data = load(d / name)
            if data is not None:
                ax.plot(data["t"], data["P"], style, label=label)
        ax.set(title=f"s = {s:g}", xlabel="t", ylim=(-1.2, 1.2))
    axes[0][0].set_ylabel("P(t)")
    axes[0][0].legend()
    fig.tight_layout()
    fig.savefig(out / "fig2.png", dpi=150)
    print(out / "fig2.png")


if __name__ == "__main__":
    main()
