"""Renders the placeholder images used by data/watermarks and samples/.

Acronym watermarks are text cards (acronym over full name). Spatial
watermarks and ordinary images are simple drawn scenes; only their file
names matter to the mock embedder, real retrievers see the pixels.

Usage: python3 tools/make_sample_assets.py
"""

import json
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent


def text_card(path: Path, lines: list[str], size=(192, 128)) -> None:
    img = Image.new("RGB", size, (246, 242, 230))
    draw = ImageDraw.Draw(img)
    y = 24
    for line in lines:
        draw.text((12, y), line, fill=(20, 20, 60))
        y += 28
    img.save(path)


def scene(path: Path, seed: int, size=(128, 128)) -> None:
    img = Image.new("RGB", size, ((seed * 53) % 256, (seed * 97) % 256, (seed * 31) % 256))
    draw = ImageDraw.Draw(img)
    for i in range(4):
        x = (seed * 17 + i * 29) % 96
        y = (seed * 11 + i * 41) % 96
        draw.ellipse((x, y, x + 28, y + 28), fill=((seed + i * 70) % 256, (i * 90) % 256, 200))
    img.save(path)


def main() -> None:
    assets = ROOT / "data" / "watermarks" / "assets"
    assets.mkdir(parents=True, exist_ok=True)
    for corpus in ("acronym_corpus.json", "spatial_corpus.json"):
        specs = json.loads((ROOT / "data" / "watermarks" / corpus).read_text())["specs"]
        for i, s in enumerate(specs):
            target = ROOT / "data" / "watermarks" / s["asset_ref"]
            if s["method"] == "acronym":
                text_card(target, [s["acronym"], s["signature"]])
            else:
                scene(target, 100 + i)

    normal = ROOT / "samples" / "assets"
    normal.mkdir(parents=True, exist_ok=True)
    topics = ["horse", "racetrack", "bridge", "harbor", "forest", "museum"]
    for t, topic in enumerate(topics):
        for j in range(6):
            scene(normal / f"{topic}_{j}.png", t * 10 + j)


if __name__ == "__main__":
    main()
