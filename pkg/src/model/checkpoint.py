"""
Formato de checkpoint: blob binário float32 little-endian + manifesto texto.

<stem>.manifest:
    vdp-checkpoint v1
    <nome>\t<d0,d1,...>\t<offset em bytes>
<stem>.bin:
    dados concatenados na ordem do manifesto
"""
from pathlib import Path
from typing import Mapping

import numpy as np

from src.core.exceptions import CheckpointException
from src.core.logger import get_logger

logger = get_logger(__name__)

MAGIC = "vdp-checkpoint v1"
_DTYPE = np.dtype("<f4")


def checkpoint_paths(path: Path | str) -> tuple[Path, Path]:
    """(manifesto, blob) para um caminho com ou sem sufixo."""
    stem = Path(path)
    if stem.suffix in (".manifest", ".bin"):
        stem = stem.with_suffix("")
    return stem.with_name(stem.name + ".manifest"), stem.with_name(stem.name + ".bin")


def save_checkpoint(state: Mapping[str, np.ndarray], path: Path | str) -> Path:
    """
    Grava um dicionário nome → array.

    Args:
        state: Folhas nomeadas (ex: `VideoDynamicsPrior.state_dict()`)
        path: Caminho base (sufixos .manifest/.bin são acrescentados)

    Returns:
        Path: Caminho do manifesto

    Raises:
        CheckpointException: Em nomes inválidos ou falha de escrita
    """
    manifest_path, blob_path = checkpoint_paths(path)
    lines = [MAGIC]
    offset = 0
    chunks: list[bytes] = []
    for name, array in state.items():
        if not name or any(ch in name for ch in "\t\n"):
            raise CheckpointException(str(manifest_path), f"nome de folha inválido: {name!r}")
        data = np.ascontiguousarray(np.asarray(array), dtype=_DTYPE)
        shape = ",".join(str(dim) for dim in data.shape)
        lines.append(f"{name}\t{shape}\t{offset}")
        raw = data.tobytes()
        chunks.append(raw)
        offset += len(raw)

    try:
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        blob_path.write_bytes(b"".join(chunks))
        manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise CheckpointException(str(manifest_path), f"falha ao gravar: {e}") from e

    logger.info(
        "Checkpoint gravado",
        extra={"path": str(manifest_path), "leaves": len(state), "bytes": offset},
    )
    return manifest_path


def load_checkpoint(path: Path | str) -> dict[str, np.ndarray]:
    """
    Lê um checkpoint gravado por `save_checkpoint`.

    Returns:
        dict[str, np.ndarray]: Arrays float32 (ordem nativa) por nome

    Raises:
        CheckpointException: Versão desconhecida, manifesto malformado ou blob truncado
    """
    manifest_path, blob_path = checkpoint_paths(path)
    try:
        lines = manifest_path.read_text(encoding="utf-8").splitlines()
        blob = blob_path.read_bytes()
    except OSError as e:
        raise CheckpointException(str(manifest_path), f"falha ao ler: {e}") from e

    if not lines or lines[0].strip() != MAGIC:
        raise CheckpointException(str(manifest_path), "cabeçalho de versão ausente ou desconhecido")

    state: dict[str, np.ndarray] = {}
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise CheckpointException(str(manifest_path), f"linha {number} malformada")
        name, shape_text, offset_text = parts
        try:
            shape = tuple(int(dim) for dim in shape_text.split(",")) if shape_text else ()
            offset = int(offset_text)
        except ValueError as e:
            raise CheckpointException(str(manifest_path), f"linha {number} malformada") from e
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * _DTYPE.itemsize
        if offset < 0 or end > len(blob):
            raise CheckpointException(str(blob_path), f"blob truncado em '{name}'")
        values = np.frombuffer(blob, dtype=_DTYPE, count=count, offset=offset)
        state[name] = values.reshape(shape).astype(np.float32)

    logger.debug("Checkpoint carregado", extra={"path": str(manifest_path), "leaves": len(state)})
    return state
