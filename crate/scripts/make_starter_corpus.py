#!/usr/bin/env python3
"""Regenerate crates/core/data/starter_corpus.json.

Samples publicly licensed sequential colormaps at 32 points, keeps those
whose CIELAB lightness is strictly monotone, and writes them in the corpus
document format. The loader resamples every entry to nine control points.
"""
import json
import sys

import numpy as np
import matplotlib
import seaborn  # noqa: F401  (registers rocket, mako, flare, crest)
import cmocean  # noqa: F401
import colorcet  # noqa: F401
import cmasher  # noqa: F401
import cmcrameri  # noqa: F401
from skimage.color import rgb2lab

SAMPLES = 32

SOURCES = {
    "matplotlib (BSD-compatible)": [
        "viridis", "plasma", "inferno", "magma", "cividis",
        "bone", "pink", "hot", "afmhot", "gist_heat", "copper", "gray",
        "cubehelix", "summer", "autumn", "spring", "winter", "Wistia",
    ],
    "ColorBrewer via matplotlib (Apache-2.0)": [
        "Blues", "BuGn", "BuPu", "GnBu", "Greens", "Greys", "Oranges",
        "OrRd", "PuBu", "PuBuGn", "PuRd", "Purples", "RdPu", "Reds",
        "YlGn", "YlGnBu", "YlOrBr", "YlOrRd",
    ],
    "seaborn (BSD-3-Clause)": ["rocket", "mako", "flare", "crest"],
    "cmocean (MIT)": [
        "cmo.thermal", "cmo.haline", "cmo.solar", "cmo.ice", "cmo.gray",
        "cmo.deep", "cmo.dense", "cmo.algae", "cmo.matter", "cmo.turbid",
        "cmo.speed", "cmo.amp", "cmo.tempo", "cmo.rain",
    ],
    "colorcet (CC-BY-4.0)": [
        "cet_fire", "cet_bgy", "cet_bgyw", "cet_bmw", "cet_bmy", "cet_kbc",
        "cet_kgy", "cet_dimgray", "cet_blues", "cet_kb",
        "cet_kg", "cet_kr", "cet_CET_L5", "cet_CET_L6", "cet_CET_L7",
        "cet_CET_L8", "cet_CET_L9", "cet_CET_L10", "cet_CET_L11",
        "cet_CET_L12", "cet_CET_L13", "cet_CET_L14", "cet_CET_L15",
        "cet_CET_L16", "cet_CET_L17", "cet_CET_L18", "cet_CET_L19",
        "cet_CET_L20",
    ] + [
        f"cet_{n}" for n in sorted(colorcet.cm)
        if n.startswith("linear_") and not n.endswith("_r")
    ],
    "cmasher (BSD-3-Clause)": [
        f"cmr.{n}" for n in cmasher.get_cmap_list("sequential")
        if not n.endswith("_r")
    ],
    "Scientific colour maps via cmcrameri (MIT)": [
        f"cmc.{n}" for n in [
            "acton", "bamako", "batlow", "batlowK", "batlowW", "bilbao",
            "buda", "davos", "devon", "glasgow", "grayC", "hawaii", "imola",
            "lajolla", "lapaz", "lipari", "navia", "nuuk", "oslo", "tokyo",
            "turku",
        ]
    ],
}

# Entries closer than this (mean CIELAB distance over the samples, either
# orientation) to an earlier entry are treated as duplicates.
DUPLICATE_DISTANCE = 2.0


def to_hex(rgb):
    return "#" + "".join(f"{int(round(c * 255)):02X}" for c in rgb)


def main(out):
    maps = []
    seen = set()
    kept = []
    for source, names in SOURCES.items():
        for name in names:
            try:
                cmap = matplotlib.colormaps[name]
            except KeyError:
                print(f"skip {name}: not registered", file=sys.stderr)
                continue
            rgb = cmap(np.linspace(0, 1, SAMPLES))[:, :3]
            hexes = [to_hex(c) for c in rgb]
            quant = np.array([[int(h[i:i + 2], 16) / 255 for i in (1, 3, 5)] for h in hexes])
            lab = rgb2lab(quant[None, :, :])[0]
            d = np.diff(lab[:, 0])
            if not (np.all(d > 0) or np.all(d < 0)):
                print(f"skip {name}: lightness not strictly monotone", file=sys.stderr)
                continue
            if abs(lab[-1, 0] - lab[0, 0]) < 30:
                print(f"skip {name}: lightness range too small", file=sys.stderr)
                continue
            oriented = lab if lab[0, 0] > lab[-1, 0] else lab[::-1]
            if any(np.mean(np.linalg.norm(oriented - o, axis=1)) < DUPLICATE_DISTANCE for o in kept):
                print(f"skip {name}: duplicate", file=sys.stderr)
                continue
            kept.append(oriented)
            ident = name
            for prefix in ("cmo.", "cet_", "cmr.", "cmc."):
                ident = ident.replace(prefix, "")
            ident = ident.lower()
            if ident in seen:
                ident = name.replace(".", "_").lower()
            seen.add(ident)
            maps.append({"id": ident, "source": f"{source}: {name}", "colors": hexes})
    doc = {"name": "starter", "colormaps": maps}
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    print(f"wrote {len(maps)} colormaps to {out}", file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/data/starter_corpus.json")
