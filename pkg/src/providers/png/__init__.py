from src.providers.png.frame_store import PngFrameStore

__all__ = ["PngFrameStore"]
