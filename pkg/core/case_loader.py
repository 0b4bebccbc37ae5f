# core/case_loader.py
"""Case file loading with a canonical JSON cache."""

import hashlib
import logging
from pathlib import Path
from typing import Optional, Union

from .casefile import PowerNetwork, parse_cdf

logger = logging.getLogger(__name__)


class CaseLoader:
    """
    Loads networks from CDF text or canonical JSON dumps.

    Parsed CDF files are cached as JSON under the cache directory, keyed by
    the content hash of the source file, so edits to a case invalidate it.
    """

    def __init__(self, cache_dir: Optional[Union[str, Path]] = None, cache_enabled: bool = True):
        """
        Initialize CaseLoader.

        Args:
            cache_dir: Directory for JSON dumps (no caching if None)
            cache_enabled: Master switch for cache reads and writes
        """
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.cache_enabled = cache_enabled and self.cache_dir is not None

        if self.cache_enabled:
            self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _get_cache_path(self, source: Path, digest: str) -> Path:
        return self.cache_dir / f"{source.stem}_{digest[:16]}.json"

    def _load_from_cache(self, cache_path: Path) -> Optional[PowerNetwork]:
        if not self.cache_enabled or not cache_path.exists():
            return None
        try:
            network = PowerNetwork.from_json(cache_path.read_text(encoding='utf-8'))
        except Exception as e:
            logger.warning("ignoring unreadable cache %s: %s", cache_path, e)
            return None
        logger.info("loaded cached network %s", cache_path.name)
        return network

    def _save_to_cache(self, cache_path: Path, network: PowerNetwork) -> None:
        if not self.cache_enabled:
            return
        try:
            cache_path.write_text(network.to_json(), encoding='utf-8')
        except OSError as e:
            logger.warning("could not write cache %s: %s", cache_path, e)

    def load(self, path: Union[str, Path]) -> PowerNetwork:
        """
        Load a network.

        Args:
            path: CDF text file, or a ``.json`` canonical dump

        Returns:
            PowerNetwork

        Raises:
            FileNotFoundError: path does not exist
            CaseParseError, CaseValidationError: invalid content
        """
        source = Path(path)
        if not source.is_file():
            raise FileNotFoundError(f"case file not found: {source}")

        text = source.read_text(encoding='utf-8', errors='replace')
        if source.suffix.lower() == '.json':
            return PowerNetwork.from_json(text)

        cache_path = None
        if self.cache_enabled:
            digest = hashlib.sha256(text.encode('utf-8')).hexdigest()
            cache_path = self._get_cache_path(source, digest)
            cached = self._load_from_cache(cache_path)
            if cached is not None:
                return cached

        network = parse_cdf(text)
        if cache_path is not None:
            self._save_to_cache(cache_path, network)
        return network
