class IHallError(Exception):
    """通用计算错误"""
    def __init__(self, message: str = "计算失败"):
        self.message = message
        super().__init__(self.message)


class ConfigError(IHallError):
    """运行配置错误"""
    pass


class ScalarError(IHallError):
    """标量域运算错误"""
    pass


class CapExceededError(IHallError):
    """超出计算上限"""
    pass


class UnsupportedSectorError(IHallError):
    """不支持的乘积扇区"""
    pass


class EngineError(IHallError):
    """引擎内部一致性错误"""
    pass


class TransportError(IHallError):
    """对象不在正交子范畴内"""
    pass
