from smartpark.gateway.config import GatewayConfig, gateway_config_from_dict, load_gateway_config
from smartpark.gateway.security import TokenSigner, hash_password, verify_password
from smartpark.gateway.service import GatewayService
from smartpark.gateway.store import DriverAccount, GatewayStore, Vehicle
from smartpark.gateway.wiring import build_app, build_service

__all__ = [
    "DriverAccount",
    "GatewayConfig",
    "GatewayService",
    "GatewayStore",
    "TokenSigner",
    "Vehicle",
    "build_app",
    "build_service",
    "gateway_config_from_dict",
    "hash_password",
    "load_gateway_config",
    "verify_password",
]
