# -*- coding: utf-8 -*-
"""
Servicio de Exportación a Excel.

Reúne las tablas de una ejecución (perfiles, reglas, leyendas, selección)
en un libro Excel, una hoja por tabla.
"""

from pathlib import Path

import pandas as pd

from src.utils.logger import configurar_logger

logger = configurar_logger(__name__)

# Excel no admite nombres de hoja de más de 31 caracteres
LARGO_MAX_HOJA = 31


class ExcelService:
    def __init__(self, directorio_salida: Path | str):
        self.directorio_salida = Path(directorio_salida)
        self.directorio_salida.mkdir(parents=True, exist_ok=True)
        logger.debug(f"ExcelService inicializado en '{self.directorio_salida}'.")

    @staticmethod
    def _nombre_hoja(nombre: str, usados: set[str]) -> str:
        """Limpia el nombre para Excel y evita duplicados tras truncar."""
        limpio = "".join(c for c in nombre if c not in "[]:*?/\\")[:LARGO_MAX_HOJA] or "hoja"
        candidato, i = limpio, 2
        while candidato in usados:
            sufijo = f"_{i}"
            candidato = limpio[: LARGO_MAX_HOJA - len(sufijo)] + sufijo
            i += 1
        usados.add(candidato)
        return candidato

    def generar_libro(self, tablas: dict[str, pd.DataFrame], nombre_archivo: str = "resultados.xlsx") -> Path:
        """Escribe un libro Excel con una hoja por tabla (en el orden del diccionario)."""
        ruta_salida = self.directorio_salida / nombre_archivo
        usados: set[str] = set()
        try:
            with pd.ExcelWriter(ruta_salida, engine="openpyxl") as writer:
                for nombre, df in tablas.items():
                    df.to_excel(writer, sheet_name=self._nombre_hoja(nombre, usados), index=False)
        except Exception as e:
            logger.error(f"Error al escribir el libro Excel: {e}", exc_info=True)
            raise
        logger.info(f"Libro Excel generado en: {ruta_salida}")
        return ruta_salida
