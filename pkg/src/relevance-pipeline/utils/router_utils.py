import importlib
import logging
import os
from pathlib import Path
from typing import List

import typer

logger = logging.getLogger(__name__)

CLI_DIR = Path(__file__).resolve().parent.parent / "cli"


def register_routers(app: typer.Typer, cli_dir: Path = CLI_DIR) -> List[str]:
    """cli/*_cli.py 모듈의 router(typer.Typer)에 정의된 명령을 루트 앱에 등록"""
    registered_routers = []

    # 파일 이름 순으로 등록해 --help 출력 순서를 고정
    for filename in sorted(os.listdir(cli_dir)):
        if not filename.endswith("_cli.py"):
            continue
        module_name = filename[:-3]
        module = importlib.import_module(f"cli.{module_name}")

        # router 속성이 있는지 확인
        router = getattr(module, "router", None)
        if router is None:
            logger.warning(f"router가 없는 CLI 모듈: {module_name}")
            continue
        app.registered_commands.extend(router.registered_commands)
        registered_routers.append(module_name)
        logger.debug(f"명령 등록됨: {module_name}")

    return registered_routers
