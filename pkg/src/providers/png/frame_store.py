import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.core.config import settings
from src.core.exceptions import FileNotFoundException, FrameIOException, ValidationException
from src.core.logger import get_logger
from src.domain.interfaces import IFrameStore
from src.domain.models import MaskSequence, VideoSequence

logger = get_logger(__name__)

FRAME_PATTERN = re.compile(r"^frame_(\d{5})\.png$")
MASK_PATTERN = re.compile(r"^mask_(\d{5})\.png$")
STATIONARY_MASK = "mask.png"
MASK_THRESHOLD = 128
_SUPPORTED_MODES = {"RGB": 3, "L": 1}


def frame_name(index: int) -> str:
    return f"frame_{index:05d}.png"


def quantize(frames: np.ndarray) -> np.ndarray:
    """
    floor(x·255 + 0.5) para uint8 (arredondamento meia-unidade para cima).

    Raises:
        ValidationException: Valores fora de [0, 1] ou não finitos
    """
    frames = np.asarray(frames, dtype=np.float64)
    if not np.all(np.isfinite(frames)) or frames.min() < 0.0 or frames.max() > 1.0:
        raise ValidationException("quadros devem estar em [0, 1] para gravação", field="frames")
    return np.floor(frames * 255.0 + 0.5).astype(np.uint8)


def _indexed_files(directory: Path, pattern: re.Pattern[str]) -> list[tuple[int, Path]]:
    found = []
    for path in directory.iterdir():
        match = pattern.match(path.name)
        if match:
            found.append((int(match.group(1)), path))
    return sorted(found)


class PngFrameStore(IFrameStore):
    """
    Diretórios de quadros PNG 8 bits (frame_%05d.png, índices contíguos a partir de 0).
    A decodificação é paralela; a ordem devolvida é sempre a ordem dos índices.
    """

    def __init__(self, workers: Optional[int] = None) -> None:
        """
        Args:
            workers: Threads de decodificação/codificação (usa settings se None)
        """
        self.workers = workers or settings.io_workers

    def _read(self, path: Path) -> np.ndarray:
        try:
            with Image.open(path) as image:
                if image.mode not in _SUPPORTED_MODES:
                    raise FrameIOException(
                        str(path),
                        f"modo '{image.mode}' não suportado (esperado RGB ou L de 8 bits)",
                    )
                pixels = np.asarray(image, dtype=np.uint8)
        except (OSError, UnidentifiedImageError) as e:
            raise FrameIOException(str(path), f"falha ao decodificar: {e}") from e
        if pixels.ndim == 2:
            pixels = pixels[:, :, None]
        return pixels.transpose(2, 0, 1)

    def load_frames(self, directory: Path | str) -> VideoSequence:
        """
        Carrega frame_00000.png, frame_00001.png, ... com p ↦ p/255.

        Raises:
            FileNotFoundException: Diretório inexistente
            FrameIOException: Sem quadros, índice faltando ou formas divergentes
        """
        root = Path(directory)
        if not root.is_dir():
            raise FileNotFoundException(str(root))
        indexed = _indexed_files(root, FRAME_PATTERN)
        if not indexed:
            raise FrameIOException(str(root), "nenhum arquivo frame_%05d.png encontrado")
        for expected, (index, _) in enumerate(indexed):
            if index != expected:
                raise FrameIOException(
                    str(root), f"índice ausente: {frame_name(expected)}", {"missing": expected}
                )

        paths = [path for _, path in indexed]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            decoded = list(pool.map(self._read, paths))

        first = decoded[0].shape
        for path, pixels in zip(paths, decoded):
            if pixels.shape != first:
                raise FrameIOException(
                    str(path), f"forma {pixels.shape} diverge de {first}", {"expected": list(first)}
                )

        frames = np.stack(decoded).astype(np.float32) / np.float32(255.0)
        logger.info(
            "Quadros carregados",
            extra={"directory": str(root), "count": len(paths), "shape": list(frames.shape)},
        )
        return VideoSequence(
            frames=frames, filenames=[p.name for p in paths], bit_depth=8, source=str(root)
        )

    def _write(self, item: tuple[Path, np.ndarray]) -> Path:
        path, pixels = item
        # uint8 [H, W] vira "L" e [H, W, 3] vira "RGB"
        image = Image.fromarray(
            np.ascontiguousarray(pixels[0] if pixels.shape[0] == 1 else pixels.transpose(1, 2, 0))
        )
        try:
            image.save(path, format="PNG")
        except OSError as e:
            raise FrameIOException(str(path), f"falha ao gravar: {e}") from e
        return path

    def save_frames(self, video: VideoSequence, directory: Path | str) -> list[Path]:
        channels = video.frame_shape[0]
        if channels not in (1, 3):
            raise ValidationException(
                f"{channels} canais não podem ser gravados como PNG", field="frames"
            )
        pixels = quantize(video.frames)
        root = Path(directory)
        try:
            root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise FrameIOException(str(root), f"falha ao criar diretório: {e}") from e

        items = [(root / frame_name(i), pixels[i]) for i in range(len(pixels))]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            written = list(pool.map(self._write, items))
        logger.info("Quadros gravados", extra={"directory": str(root), "count": len(written)})
        return written

    def _read_mask(self, path: Path) -> np.ndarray:
        try:
            with Image.open(path) as image:
                gray = image if image.mode == "L" else image.convert("L")
                pixels = np.asarray(gray, dtype=np.uint8)
        except (OSError, UnidentifiedImageError) as e:
            raise FrameIOException(str(path), f"falha ao decodificar máscara: {e}") from e
        return (pixels >= MASK_THRESHOLD).astype(np.float32)[None]

    def load_masks(self, directory: Path | str, length: int) -> MaskSequence:
        """
        Lê mask.png (estacionária, replicada T vezes) ou mask_%05d.png (uma por quadro).
        Um caminho de arquivo é tratado como máscara estacionária.

        Raises:
            FileNotFoundException: Caminho inexistente
            ValidationException: Contagem diferente de 1 e de `length`
        """
        root = Path(directory)
        if root.is_file():
            paths, stationary = [root], True
        elif root.is_dir():
            indexed = _indexed_files(root, MASK_PATTERN)
            paths = [path for _, path in indexed]
            stationary = False
            if not paths and (root / STATIONARY_MASK).is_file():
                paths, stationary = [root / STATIONARY_MASK], True
        else:
            raise FileNotFoundException(str(root))

        if len(paths) == 1 and length > 1:
            stationary = True
        if len(paths) not in (1, length):
            raise ValidationException(
                f"{len(paths)} máscaras para {length} quadros (esperado 1 ou {length})",
                field="mask",
                details={"masks": len(paths), "frames": length},
            )

        masks = np.stack([self._read_mask(path) for path in paths])
        if stationary and length > 1:
            masks = np.repeat(masks, length, axis=0)
        return MaskSequence(masks=masks, stationary=stationary)
