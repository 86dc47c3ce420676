"""
regretlab 资源：博弈目录与文档
"""

import json

from resources import RegretLab_Resource, read_doc


@RegretLab_Resource(
    "catalog://games",
    name="game_catalog",
    title="Game Catalog",
    description="内置博弈目录：名称、参数范围与来源说明",
    mime_type="application/json",
)
def game_catalog() -> str:
    from core.catalog import list_entries

    return json.dumps(list_entries(), ensure_ascii=False, indent=2)


@RegretLab_Resource(
    "docs://regretlab-guide",
    name="regretlab_guide",
    title="regretlab Guide",
    description="命令行、实验配置与 MCP 工具的使用指南",
    mime_type="text/markdown",
)
def regretlab_guide() -> str:
    return read_doc("guide.md")


@RegretLab_Resource(
    "docs://report-schema",
    name="report_schema",
    title="Report Schema",
    description="trajectory.csv、summary.json 与 manifest.json 的字段说明",
    mime_type="text/markdown",
)
def report_schema() -> str:
    return read_doc("report_schema.md")
