# -*- coding: utf-8 -*-
"""
Gestor de Configuración (SettingsManager).

Lee y escribe archivos JSON de claves (configuración del pipeline,
especificación de mezclas) completando las claves que falten con
valores por defecto.
"""

import json
from pathlib import Path
from typing import Any

from src.utils.exceptions import ConfiguracionError
from src.utils.logger import configurar_logger

logger = configurar_logger(__name__)


class SettingsManager:
    """Lee y escribe un archivo de configuración JSON con valores por defecto."""

    def __init__(self, file_path: Path | str, defaults: dict | None = None):
        self.file_path = Path(file_path)
        self.defaults = defaults or {}
        self.config = self.load_settings()

    def load_settings(self) -> dict:
        """Carga la configuración desde el archivo, completando claves faltantes."""
        if not self.file_path.exists():
            logger.info(f"No se encontró '{self.file_path}'. Usando valores por defecto.")
            return dict(self.defaults)
        try:
            with open(self.file_path, "r", encoding="utf-8") as f:
                config = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfiguracionError(f"'{self.file_path}' no es un JSON válido: {e}") from e
        if not isinstance(config, dict):
            raise ConfiguracionError(f"'{self.file_path}' debe contener un objeto de claves.")
        for key, value in self.defaults.items():
            config.setdefault(key, value)
        return config

    def save_settings(self, config: dict):
        """Guarda la configuración en el archivo."""
        self.config = config
        self.file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.file_path, "w", encoding="utf-8") as f:
            json.dump(config, f, indent=4, ensure_ascii=False, sort_keys=True)
        logger.info(f"Configuración guardada en '{self.file_path}'")

    def get_setting(self, key: str) -> Any:
        """Obtiene un valor de la configuración."""
        return self.config.get(key, self.defaults.get(key))
