# -*- coding: utf-8 -*-
"""
Punto de Entrada Principal de la Aplicación.

Uso: python run_app.py <subcomando> [opciones]
"""

import sys
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent
if str(BASE_DIR) not in sys.path:
    sys.path.append(str(BASE_DIR))

from src.cli.comandos import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
