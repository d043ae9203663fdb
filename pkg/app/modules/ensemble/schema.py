from fractions import Fraction

from pydantic import BaseModel, ConfigDict, Field


class ExactResult(BaseModel):
    """Exported exact quantity for one ensemble, activity and site"""
    model_config = ConfigDict(populate_by_name=True)

    quantity: str
    d: int
    M: int
    boundary: str
    lambda_: str = Field(alias="lambda")
    v0: list[int]
    value_num: int
    value_den: int
    value_float: float

    @classmethod
    def build(cls, quantity: str, d: int, M: int, boundary: str, activity: Fraction,
              v0: tuple[int, ...], value: Fraction) -> "ExactResult":
        return cls(
            quantity=quantity,
            d=d,
            M=M,
            boundary=boundary,
            lambda_=str(activity),
            v0=list(v0),
            value_num=value.numerator,
            value_den=value.denominator,
            value_float=float(value),
        )
