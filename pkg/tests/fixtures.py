"""Shared example expressions and cached pipeline artifacts."""

from __future__ import annotations

from functools import lru_cache

from dtsdpbc import (box_of_static, build_rg, build_ts, enumerate_activities,
                     parse_static)

# Named example systems: text plus the expected state count and tag counts
# (number of s-tangible / w-tangible / vanishing states).
EXAMPLES: dict[str, tuple[str, int, int, int, int]] = {
    "trprob": ("({a},1/2)[]({a},1/3)", 2, 2, 0, 0),
    "trprob_imm": ("({a},#0:1)[]({a},#0:2)", 2, 1, 0, 1),
    "tschowm": ("({a},#2:1)[]({b},#3:2)", 3, 2, 1, 0),
    "tschowsm": ("({a},#3:1)[]({b},1/3)", 4, 3, 1, 0),
    "tsitswm": ("[({a},1/2)*({b},#3:1)*({c},1/3)]", 5, 4, 1, 0),
    "tspariwm": ("({a},#0:1)||({b},#2:2)||({c},#3:3)", 5, 2, 2, 1),
    "tsparwsm": ("({a},#3:1)||({b},1/3)", 7, 5, 2, 0),
    "tsparsyrswm": ("(({a},#2:1)||({~a},#2:2)) sy a rs a", 3, 2, 1, 0),
    "tsparsyrsiwm":
        ("((({a},#1:1);({b,~x},#0:2))||(({x},#0:3)[]({c},#1:4))) sy x rs x",
         2, 1, 1, 0),
    "tsparsyrswwm":
        ("((({a},#2:1);({b,~x},#2:2))||(({x},#2:3)[]({c},#2:4))) sy x rs x",
         4, 3, 1, 0),
    "tsparsywwm":
        ("((({a},#2:1);({b,~x},#2:2))||(({x},#2:3)[]({c},#2:4))) sy x",
         5, 3, 2, 0),
    "tsitchoswm":
        ("[({a},1/2)*(({b},#1:1)[](({c},#1:2);({d},1/3)))*stop]", 3, 2, 1, 0),
    "tsitchoswim": ("[({a},1/2)*(({b},#1:1);((({c},#0:1);({d},1/2))"
                    "[](({e},#0:2);({f},1/3))))*stop]", 5, 3, 1, 1),
}

TRAVEL_TEMPLATE = ("[({a},$rho)*(({b},#1:$k);((({c},#0:$l);({d},$theta))"
                   "[](({e},#0:$m);({f},$phi))))*stop]")


def travel_text(rho="1/2", k="1", l="1", m="2", theta="1/2", phi="1/3") -> str:
    return (TRAVEL_TEMPLATE.replace("$rho", rho).replace("$k", k)
            .replace("$l", l).replace("$m", m)
            .replace("$theta", theta).replace("$phi", phi))


# The acceptance parameters l=1, m=2, theta=1/2, phi=1/3, rho=1/2, k=1.
TRAVEL = travel_text()
# Symmetric variant l=m, theta=phi=1/2 for the performance-index checks.
TRAVEL_SYMMETRIC = travel_text(l="1", m="1", theta="1/2", phi="1/2")

# An ergodic system whose states differ only by timer values: iteration over
# a waiting activity with an unreachable exit.
TIMER_LOOP = "[({a},1/2)*({b},#3:1)*stop]"

NON_REGULAR = "[({a},1/2)*(({b},1/2)||({c},1/2))*({d},1/2)]"


@lru_cache(maxsize=None)
def expr_of(text: str):
    return enumerate_activities(parse_static(text))


@lru_cache(maxsize=None)
def ts_of(text: str):
    return build_ts(expr_of(text))


@lru_cache(maxsize=None)
def box_of(text: str):
    return box_of_static(expr_of(text))


@lru_cache(maxsize=None)
def rg_of(text: str):
    return build_rg(box_of(text))
