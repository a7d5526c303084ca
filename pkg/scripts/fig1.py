"""P(t) at alpha = 0.1, s = 0.5 for several hierarchy tiers against Redfield and Redfield-plus."""

from _common import figure, load, parse_args, run


def main():
    args = parse_args("fig1")
    cfg, out = run(args)
    plt = figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    for L in cfg.run.L:
        d = load(out / f"P_heom_L{L}.csv")
        if d is not None:
            ax.plot(d["t"], d["P"], label=f"FP-HEOM L={L}")
    for name, style in (("redfield_plus", "--"), ("redfield", ":")):
        d = load(out / f"P_{name}.csv")
        if d is not None:
            ax.plot(d["t"], d["P"], style, label=name.replace("_", "-"))
    ax.set(xlabel="t", ylabel="P(t)", ylim=(-1.2, 1.2))
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "fig1.png", dpi=150)
    print(out / "fig1.png")


if __name__ == "__main__":
    main()
