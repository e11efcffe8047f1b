"""
SKT Logging Setup
SKT 連続体解析 - ログ設定

環境変数 SKT_LOG_LEVEL (DEBUG/INFO/WARNING...) でパッケージ全体のレベルを切り替える。
メッセージは "event key=value ..." 形式で出す。
"""

import logging
import os
from typing import Any, Union

_ROOT = "skt_core_engine"
_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_configured = False


def _configure_root() -> None:
    global _configured
    if _configured:
        return
    root = logging.getLogger(_ROOT)
    level_name = os.environ.get("SKT_LOG_LEVEL", "WARNING").upper()
    root.setLevel(getattr(logging, level_name, logging.WARNING))
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        root.addHandler(handler)
    root.propagate = False
    _configured = True


def get_logger(name: str) -> logging.Logger:
    """モジュール用ロガーを取得（パッケージルート配下に揃える）"""
    _configure_root()
    if not name.startswith(_ROOT):
        name = f"{_ROOT}.{name.rsplit('.', 1)[-1]}"
    return logging.getLogger(name)


def set_level(level: Union[int, str]) -> None:
    """CLI の -v/-vv から呼ばれる"""
    _configure_root()
    logging.getLogger(_ROOT).setLevel(level)


def kv(event: str, **fields: Any) -> str:
    """構造化メッセージ 'event k=v ...' を組み立てる"""
    parts = [event]
    for key, value in fields.items():
        if isinstance(value, float):
            parts.append(f"{key}={value:.6g}")
        else:
            parts.append(f"{key}={value}")
    return " ".join(parts)
