import logging
import os

import uvicorn
from mcp.server import Server
from mcp.server.fastmcp import FastMCP
from mcp.server.sse import SseServerTransport
from starlette.applications import Starlette
from starlette.middleware.cors import CORSMiddleware
from starlette.requests import Request
from starlette.routing import Mount, Route

import prompts
import resources
import tools
from modules.YA_Common.utils.config import get_config, get_server_name, get_transport_type
from modules.YA_Common.utils.errors import ConfigException
from modules.YA_Common.utils.helpers import print_server_banner
from modules.YA_Common.utils.logger import get_logger
from modules.YA_Common.utils.middleware import exception_handler
from setup import setup

# 这些库的日志在 stdio 传输下会混进协议流
QUIET_LIBRARIES = ("mcp", "uvicorn", "uvicorn.access", "uvicorn.error", "httpx", "httpcore")


def silence_libraries() -> None:
    for name in QUIET_LIBRARIES:
        lib = logging.getLogger(name)
        lib.propagate = False
        lib.handlers[:] = [logging.NullHandler()]


class RegretLabServer:
    """
    把博弈分析、动力学模拟与实验运行挂到 FastMCP 上，传输方式取 config.yaml 的 transport.type。
    """

    def __init__(self):
        self.server_name = get_server_name()
        self.transport_type = get_transport_type()
        self.logger = get_logger("server")
        silence_libraries()

        self.app: FastMCP = FastMCP(self.server_name)
        self.counts = {
            "tools": tools.register_tools(self.app),
            "prompts": prompts.register_prompts(self.app),
            "resources": resources.register_resources(self.app),
        }

    @exception_handler
    def run_stdio(self):
        """通过标准输入输出运行"""
        self.logger.info(f"通过 stdio 运行 MCP 服务: {self.server_name}")
        self.app.run(transport="stdio")

    @exception_handler
    def run_sse(self):
        """通过 SSE 运行；HOST / PORT 环境变量优先于配置文件"""
        host = os.getenv("HOST") or get_config("transport.host", "0.0.0.0")
        port = int(os.getenv("PORT") or get_config("transport.port", 12345))

        self.logger.info(f"通过 SSE 运行 MCP 服务: {self.server_name} ({host}:{port})")
        uvicorn.run(self.create_starlette_app(self.app._mcp_server), host=host, port=port)

    def create_starlette_app(self, mcp_server: Server, *, debug: bool = False) -> Starlette:
        sse = SseServerTransport("/messages/")

        async def handle_sse(request: Request) -> None:
            async with sse.connect_sse(request.scope, request.receive, request._send) as (
                read_stream,
                write_stream,
            ):
                await mcp_server.run(
                    read_stream,
                    write_stream,
                    mcp_server.create_initialization_options(),
                )

        app = Starlette(
            debug=debug,
            routes=[
                Route("/", endpoint=handle_sse),
                Mount("/messages/", app=sse.handle_post_message),
            ],
        )
        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["GET", "POST", "OPTIONS"],
            allow_headers=["*"],
        )
        return app

    def start(self) -> int:
        """根据配置的传输方式启动"""
        self.logger.info(f"启动 MCP 服务: {self.server_name} {self.counts}")
        print_server_banner()

        if self.transport_type == "stdio":
            return self.run_stdio()
        if self.transport_type == "sse":
            return self.run_sse()
        raise ConfigException(
            f"未知的传输方式: {self.transport_type}", {"supported": ["stdio", "sse"]}
        )


setup()
lab_server = RegretLabServer()
app = lab_server.app

if __name__ == "__main__":
    raise SystemExit(lab_server.start())
