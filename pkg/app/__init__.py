"""
ea-bounds：Edwards–Anderson 自旋玻璃基态能量的严格下界

单元分解下界（经典与量子）、有限格点精确基态、性质校验套件
"""
