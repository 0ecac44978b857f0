import logging

import typer

from utils.router_utils import register_routers

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="qrel",
    help="VQA 질문 관련성 파이프라인: 시각/비시각 판별, 거짓 전제 데이터셋 구축, 관련성 분류기 학습·평가",
    no_args_is_help=True,
    add_completion=False,
)

# 자동 명령 등록
register_routers(app)


if __name__ == "__main__":
    app()
