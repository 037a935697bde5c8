import math

import numpy as np
import pytest

from hardylab.expr import (DomainError, ExprSyntaxError, classify,
                           eval_classified, eval_scalar, evaluate, parse,
                           to_string)


def test_parse_power_with_negative_exponent():
    e = parse("t1^(-0.5)", 1)
    assert e.kind == "pow" and e.value == -0.5
    assert eval_scalar(e, (0.25,)) == pytest.approx(2.0, rel=1e-15)


def test_parse_constant_in_higher_arity():
    e = parse("1", 2)
    assert e.kind == "const" and e.value == 1.0


def test_parse_riesz_kernel_matches_two_slot_form():
    e = parse("norm1m(1-t1,1-t2)^(-1.5)", 2)
    c = classify(e, 2)
    assert c.tag == "riesz"
    assert c.riesz_exponent == -1.5
    assert c.riesz_arity == 2
    # value check against the explicit euclidean norm
    t = np.array([[0.3, 0.8]])
    want = ((1 - 0.3) ** 2 + (1 - 0.8) ** 2) ** (-0.75)
    assert evaluate(e, t=t)[0] == pytest.approx(want, rel=1e-14)


def test_eval_product():
    assert eval_scalar(parse("t1*t2", 2), (0.5, 0.25)) == pytest.approx(0.125)


def test_eval_log_monomial_oracle():
    # direct arithmetic oracle at t1 = e^{-1}
    e = parse("log(1/t1)*t1^(-1/4)", 1)
    got = eval_scalar(e, (math.exp(-1.0),))
    assert got == pytest.approx(math.exp(0.25), rel=1e-14)


def test_unary_minus_binds_looser_than_power():
    assert eval_scalar(parse("-r^2/2", 0), r=3.0) == pytest.approx(-4.5)
    assert eval_scalar(parse("(-2)^2 + 1", 0), r=1.0) == pytest.approx(5.0)


def test_domain_errors_are_raised_not_nan():
    with pytest.raises(DomainError):
        eval_scalar(parse("log(t1 - 2)", 1), (0.5,))
    with pytest.raises(DomainError):
        eval_scalar(parse("(t1 - 2)^0.5", 1), (0.5,))
    with pytest.raises(DomainError):
        eval_scalar(parse("1/t1", 1), (0.0,))


def test_syntax_error_carries_position():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("t1 + * 2", 1)
    assert exc.value.position > 0


def test_arity_violation():
    with pytest.raises(ExprSyntaxError):
        parse("t3", 2)


def test_exponent_must_be_constant():
    with pytest.raises(ExprSyntaxError):
        parse("t1^t2", 2)


def test_classify_monomial():
    c = classify(parse("t1^(-1/2)", 1), 1)
    assert c.tag == "monomial"
    assert c.t_exponents == (-0.5,)
    assert c.coeff == 1.0


def test_classify_log_monomial():
    c = classify(parse("t1^(-1/4) * log(1/t1)", 1), 1)
    assert c.tag == "log-monomial"
    assert c.t_exponents == (-0.25,)
    assert c.t_log_powers == (1,)


def test_classify_general():
    assert classify(parse("t1 + t2", 2), 2).tag == "general"
    assert classify(parse("exp(-t1)", 1), 1).tag == "general"
    assert classify(parse("min(t1, t2)", 2), 2).tag == "general"


def test_classify_single_axis_helper():
    assert classify(parse("0.5 * t2^2", 2), 2).single_axis() == 2
    assert classify(parse("t1*t2", 2), 2).single_axis() is None


def test_roundtrip_evaluates_identically(rng):
    texts = [
        "t1^(-0.5)",
        "0.25 * t1^2 * t2^(-0.75)",
        "log(1/t1) * t2^(1/3) - 2",
        "min(t1, t2^2, 0.5)",
        "norm1m(1-t1, 1-t2)^(-0.5) * 3",
        "exp(-t1 * t2) + abs(t1 - t2)",
        "(t1 + 2*t2) / (1 + t1)",
    ]
    pts = rng.uniform(0.05, 0.95, size=(64, 2))
    for text in texts:
        e = parse(text, 2)
        back = parse(to_string(e), 2)
        a = evaluate(e, t=pts)
        b = evaluate(back, t=pts)
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a) + 1.0)


def test_classification_soundness(rng):
    texts = [
        "t1^(-1/2)",
        "2 * t1^0.3 * t2^(-0.6)",
        "t1^(-1/4) * log(1/t1)",
        "abs(-3 * t2^2) * log(1/t1)",
        "norm1m(1-t1,1-t2)^(-1.5)",
    ]
    pts = rng.uniform(0.05, 0.95, size=(64, 2))
    for text in texts:
        e = parse(text, 2)
        c = classify(e, 2)
        assert c.tag != "general"
        direct = evaluate(e, t=pts)
        rebuilt = eval_classified(c, pts, 2)
        assert np.max(np.abs(direct - rebuilt)) <= 1e-12 * np.max(np.abs(direct))


def test_classify_radial_power():
    c = classify(parse("2*r^(-0.5)", 0), 0)
    assert c.tag == "monomial"
    assert c.coeff == 2.0
    assert c.r_exponent == -0.5
