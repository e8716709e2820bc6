"""
核心类型与效用代数模块
"""
