"""
精确分数工具
"""
from decimal import Decimal, ROUND_HALF_EVEN, localcontext
from fractions import Fraction
from typing import Union

from app.utils.response import ConfigException

Number = Union[int, Fraction]


def as_fraction(value: Union[int, str, Fraction]) -> Fraction:
    """
    将整数、分数字符串（如 "-1/2"）转换为精确分数

    Args:
        value: 输入值

    Returns:
        Fraction: 精确分数

    Raises:
        ConfigException: 无法解析或为浮点数
    """
    if isinstance(value, bool):
        raise ConfigException(f"无法解析为分数: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigException(f"无法解析为分数: {value!r}")
    raise ConfigException(f"只接受精确数值（整数或分数），收到: {type(value).__name__}")


def to_decimal_string(value: Fraction, precision: int = 6) -> str:
    """
    分数的十进制表示：按 precision 位小数四舍六入五成双，去掉末尾的 0

    Args:
        value: 精确分数
        precision: 小数位数

    Returns:
        str: 十进制字符串，如 "-2.203125"、"-1.5"、"-2"
    """
    with localcontext() as ctx:
        ctx.prec = max(50, precision + 30)
        quotient = Decimal(value.numerator) / Decimal(value.denominator)
        rounded = quotient.quantize(Decimal(1).scaleb(-precision), rounding=ROUND_HALF_EVEN)
        text = format(rounded.normalize(), "f")
    if text in ("-0", "-0.0"):
        return "0"
    return text


def format_fraction(value: Fraction) -> str:
    """分数的紧凑文本形式：整数不带分母"""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def decimal_sqrt(value: Fraction, precision: int = 30) -> Decimal:
    """非负分数的高精度平方根"""
    with localcontext() as ctx:
        ctx.prec = precision
        return (Decimal(value.numerator) / Decimal(value.denominator)).sqrt()
