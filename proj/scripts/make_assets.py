#!/usr/bin/env python3
"""Regenerates the visual assets of the bundled courses.

Each stdio problem gets a looping terminal animation of a few runs (input
typed, output printed); the function problem gets a still image of
input/output pairs. Run from the repository root.
"""
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont

ROOT = Path(__file__).resolve().parent.parent / "courses"
W, H = 520, 220
BG, FG, IN = (24, 24, 28), (220, 220, 220), (120, 200, 255)


def font():
    try:
        return ImageFont.truetype("DejaVuSansMono.ttf", 18)
    except OSError:
        return ImageFont.load_default()


def terminal_frames(runs):
    """runs: list of (prompt, typed, output). One frame per typed character."""
    f = font()
    frames, durations = [], []
    for prompt, typed, output in runs:
        for i in range(len(typed) + 1):
            img = Image.new("RGB", (W, H), BG)
            d = ImageDraw.Draw(img)
            d.text((16, 20), "$ python3 program.py", fill=FG, font=f)
            d.text((16, 56), prompt, fill=FG, font=f)
            x = 16 + d.textlength(prompt, font=f)
            d.text((x, 56), typed[:i], fill=IN, font=f)
            frames.append(img)
            durations.append(180)
        img = frames[-1].copy()
        ImageDraw.Draw(img).text((16, 92), output, fill=FG, font=f)
        frames.append(img)
        durations.append(2200)
    return frames, durations


def save_gif(path, runs):
    frames, durations = terminal_frames(runs)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames[0].save(path, save_all=True, append_images=frames[1:], duration=durations, loop=0)


def counter_png(path):
    f = font()
    img = Image.new("RGB", (W, H), (250, 250, 250))
    d = ImageDraw.Draw(img)
    rows = [("[0, 1, 0, 2, 0, 3]", "3"), ("[1, 2, 3]", "0"), ("[0, 0]", "2"), ("[]", "0")]
    for i, (arg, out) in enumerate(rows):
        y = 24 + i * 44
        d.text((24, y), f"counter({arg})", fill=(30, 30, 30), font=f)
        d.text((360, y), f"-> {out}", fill=(20, 110, 40), font=f)
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path)


if __name__ == "__main__":
    save_gif(ROOT / "intro-python/hello/assets/demo.gif",
             [("Enter your name: ", "Sarah", "Hello Sarah"), ("Enter your name: ", "Ana", "Hello Ana")])
    save_gif(ROOT / "intro-python/ages/assets/demo.gif",
             [("Enter your age: ", "9", "Child"), ("Enter your age: ", "16", "Teenager"),
              ("Enter your age: ", "42", "Adult")])
    save_gif(ROOT / "intro-python/judges/assets/demo.gif",
             [("", "2.0 3.0 3.0 3.0 4.0", "3.0"), ("", "8.0 9.5 7.5 6.0 9.0", "8.17"),
              ("", "4.0 6.5 8.0 7.0 6.0", "6.5")])
    counter_png(ROOT / "python-functions/counter/assets/examples.png")
