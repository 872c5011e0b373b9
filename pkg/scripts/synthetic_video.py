"""
Gera uma sequência sintética (quadrado em movimento) e uma máscara central
para execuções de bancada.

Uso:
    python -m scripts.synthetic_video --out data/square --frames 15 --size 48
"""
import argparse
from pathlib import Path

import numpy as np
from PIL import Image

from src.core.logger import get_logger
from src.providers.png.frame_store import PngFrameStore, quantize
from src.services.synthetic import center_hole_mask, moving_square_video

logger = get_logger(__name__)


def main() -> None:
    parser = argparse.ArgumentParser(description="Gera quadros sintéticos frame_%05d.png")
    parser.add_argument("--out", required=True, help="Diretório de saída")
    parser.add_argument("--frames", type=int, default=15)
    parser.add_argument("--size", type=int, default=48)
    parser.add_argument("--channels", type=int, choices=(1, 3), default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    video = moving_square_video(
        length=args.frames,
        height=args.size,
        width=args.size,
        channels=args.channels,
        seed=args.seed,
    )
    out = Path(args.out)
    PngFrameStore().save_frames(video, out)

    mask = center_hole_mask(args.size, args.size)
    Image.fromarray(quantize(mask.masks[0, 0])).save(out / "mask.png")
    logger.info(
        "Sequência sintética gerada",
        extra={
            "out": str(out),
            "frames": args.frames,
            "size": args.size,
            "hole": int(np.sum(mask.masks == 0)),
        },
    )


if __name__ == "__main__":
    main()
