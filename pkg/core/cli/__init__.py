"""
cli 模块初始化文件
"""
