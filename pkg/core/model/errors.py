"""
异常定义
求解器和数据层抛出的所有业务异常都继承 FairnessError，命令行据此映射退出码
"""

from typing import Optional


class FairnessError(Exception):
    """业务异常基类"""


class ShapeError(FairnessError, ValueError):
    """维度不匹配"""


class EmptyGroupError(FairnessError, ValueError):
    """群组为空"""


class DataFormatError(FairnessError, ValueError):
    """CSV / JSON 内容无法解析"""


class OracleDivergedError(FairnessError):
    """加权逻辑回归训练出现非有限损失"""

    def __init__(self, learning_rate: float, message: Optional[str] = None):
        self.learning_rate = learning_rate
        super().__init__(message or f"训练发散（非有限损失），学习率 learning_rate={learning_rate}")


class DegenerateOracleError(FairnessError):
    """oracle 每一轮都没有分对任何点，无法归一化概率"""


class StuckGreedyError(FairnessError):
    """Greedy 某一轮最优假设覆盖 0 个剩余点"""


class NonConvergenceError(FairnessError):
    """迭代求解未收敛，gap 为最终一阶证书的相对差距"""

    def __init__(self, gap: float, message: Optional[str] = None):
        self.gap = gap
        super().__init__(message or f"求解未收敛，最终证书差距 gap={gap:.3e}")


class EnumerationGuardError(FairnessError):
    """子集枚举规模超过上限"""


class InfeasibleSweepError(FairnessError):
    """γ 网格里没有任何一个值能让虚拟博弈收敛"""
