"""Top-down and side views of a scene: room, microphone, sources, first-order images.

    python3 scripts/plot_scene.py --scene response.txt --out scene.png
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from scenenoise.acoustics import RoomParams, scene_geometry  # noqa: E402
from scenenoise.scene import parse_scene_info  # noqa: E402


def draw(ax, geo, i, j, labels):
    dims = geo["dimensions"]
    ax.add_patch(plt.Rectangle((0, 0), dims[i], dims[j], fill=False, lw=1.5))
    for k, src in enumerate(geo["sources"]):
        color = f"C{k}"
        ax.plot(src["location"][i], src["location"][j], "o", color=color, label=src["label"])
        for im in src["images"]:
            ax.plot(im["location"][i], im["location"][j], "x", color=color, alpha=0.5)
    mic = geo["microphone"]
    ax.plot(mic[i], mic[j], "k^", ms=9, label="microphone")
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    ax.set_aspect("equal")
    ax.grid(alpha=0.3)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scene", required=True, help="scene response text file")
    ap.add_argument("--out", default="scene.png")
    ap.add_argument("--rt60", type=float, default=0.5)
    args = ap.parse_args()

    scene = parse_scene_info(Path(args.scene).read_text(encoding="utf-8"))
    geo = scene_geometry(scene, RoomParams(rt60=args.rt60))
    fig, (top, side) = plt.subplots(1, 2, figsize=(11, 5))
    draw(top, geo, 0, 1, ("x (m)", "y (m)"))
    draw(side, geo, 0, 2, ("x (m)", "z (m)"))
    top.set_title(f"{scene.scene_type or 'scene'}: top view")
    side.set_title(f"side view, absorption {geo['absorption']:.3f}")
    top.legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(args.out)


if __name__ == "__main__":
    main()
