"""Built-in ground-truth policies for experiments.

Three themed policies (university, healthcare, project management) and
three variants of the same shape whose rules also use negative filters and
negative relations (the "-pn" names).  Entity populations are generated
with correlated attribute profiles (e.g. only teaching staff can be
tenured) so the complete logs look like plausible organizational data.
"""

from __future__ import annotations

import numpy as np

from .model import AttributeSchema, Policy, make_rule
from .synth import UniverseSpec, build_universe

BUILTIN_NAMES = (
    "university", "healthcare", "project-management",
    "university-pn", "healthcare-pn", "project-management-pn",
)


def _pick(rng: np.random.Generator, weighted: list[tuple[str, float]]) -> str:
    values = [v for v, _ in weighted]
    weights = np.array([w for _, w in weighted], dtype=float)
    weights /= weights.sum()
    return values[int(rng.choice(len(values), p=weights))]


def _uniform(rng: np.random.Generator, values: list[str]) -> str:
    return values[int(rng.integers(len(values)))]


# -- university -------------------------------------------------------------

_DEPTS = ["bio", "cs", "ee", "math", "me"]

_UNIVERSITY_SCHEMA = AttributeSchema(
    user_attrs=("position", "dept_u", "level", "committee", "tenure"),
    object_attrs=("type", "dept_o", "course_level", "confidentiality"),
    session_attrs=("time", "location"),
    operations=frozenset({"read", "write", "approve", "assign"}),
    ranges={
        "position": frozenset({"student", "ta", "instructor", "staff",
                               "chair", "dean"}),
        "dept_u": frozenset(_DEPTS),
        "level": frozenset({"undergrad", "grad", "phd", "na"}),
        "committee": frozenset({"admissions", "curriculum", "hiring", "none"}),
        "tenure": frozenset({"tenured", "untenured", "na"}),
        "type": frozenset({"application", "exam", "gradebook", "roster",
                           "syllabus", "transcript"}),
        "dept_o": frozenset(_DEPTS),
        "course_level": frozenset({"intro", "advanced", "na"}),
        "confidentiality": frozenset({"low", "medium", "high"}),
        "time": frozenset({"working", "nonworking"}),
        "location": frozenset({"campus", "remote", "lab", "abroad"}),
    },
)


def _university_user(rng) -> dict[str, str]:
    position = _pick(rng, [("student", 0.50), ("ta", 0.12), ("instructor", 0.18),
                           ("staff", 0.08), ("chair", 0.07), ("dean", 0.05)])
    if position == "student":
        level = _pick(rng, [("undergrad", 0.5), ("grad", 0.35), ("phd", 0.15)])
    elif position == "ta":
        level = _pick(rng, [("grad", 0.6), ("phd", 0.4)])
    else:
        level = "na"
    if position in ("instructor", "chair", "dean"):
        tenure = _pick(rng, [("tenured", 0.6), ("untenured", 0.4)])
        committee = _pick(rng, [("none", 0.4), ("admissions", 0.25),
                                ("curriculum", 0.2), ("hiring", 0.15)])
    else:
        tenure = "na"
        committee = _pick(rng, [("none", 0.9), ("curriculum", 0.1)])
    return {"position": position, "dept_u": _uniform(rng, _DEPTS),
            "level": level, "committee": committee, "tenure": tenure}


def _university_object(rng) -> dict[str, str]:
    otype = _pick(rng, [("syllabus", 0.2), ("gradebook", 0.2), ("exam", 0.15),
                        ("roster", 0.15), ("application", 0.15),
                        ("transcript", 0.15)])
    if otype in ("syllabus", "gradebook", "exam", "roster"):
        course_level = _pick(rng, [("intro", 0.5), ("advanced", 0.5)])
    else:
        course_level = "na"
    confidentiality = {
        "syllabus": [("low", 0.8), ("medium", 0.2)],
        "roster": [("low", 0.4), ("medium", 0.6)],
        "gradebook": [("medium", 0.7), ("high", 0.3)],
        "exam": [("medium", 0.5), ("high", 0.5)],
        "application": [("medium", 0.3), ("high", 0.7)],
        "transcript": [("high", 0.9), ("medium", 0.1)],
    }[otype]
    return {"type": otype, "dept_o": _uniform(rng, _DEPTS),
            "course_level": course_level,
            "confidentiality": _pick(rng, confidentiality)}


def _university_session(rng) -> dict[str, str]:
    return {"time": _pick(rng, [("working", 0.6), ("nonworking", 0.4)]),
            "location": _pick(rng, [("campus", 0.55), ("remote", 0.25),
                                    ("lab", 0.12), ("abroad", 0.08)])}


_UNIVERSITY_RULES = [
    # Students read syllabi of their own department.
    make_rule([("position", "student"), ("type", "syllabus")],
              [("dept_u", "dept_o")], "read"),
    # Graduate students read rosters of their own department.
    make_rule([("position", "student"), ("level", "grad"), ("type", "roster")],
              [("dept_u", "dept_o")], "read"),
    # TAs maintain gradebooks of their own department.
    make_rule([("position", "ta"), ("type", "gradebook")],
              [("dept_u", "dept_o")], "write"),
    # Instructors maintain gradebooks of their own department.
    make_rule([("position", "instructor"), ("type", "gradebook")],
              [("dept_u", "dept_o")], "write"),
    # Instructors assign exams in their own department.
    make_rule([("position", "instructor"), ("type", "exam")],
              [("dept_u", "dept_o")], "assign"),
    # Chairs approve applications to their own department.
    make_rule([("position", "chair"), ("type", "application")],
              [("dept_u", "dept_o")], "approve"),
    # Admissions committee members read applications.
    make_rule([("committee", "admissions"), ("type", "application")], [], "read"),
    # Staff read transcripts during working hours.
    make_rule([("position", "staff"), ("type", "transcript"),
               ("time", "working")], [], "read"),
    # Deans read everything.
    make_rule([("position", "dean")], [], "read"),
    # Tenured hiring-committee members approve applications.
    make_rule([("tenure", "tenured"), ("committee", "hiring"),
               ("type", "application")], [], "approve"),
]

_UNIVERSITY_PN_RULES = [
    # Students read syllabi of their own department, but not from abroad.
    make_rule([("position", "student"), ("type", "syllabus"),
               ("location", "abroad", False)],
              [("dept_u", "dept_o")], "read"),
    # Graduate students read non-confidential rosters of their department.
    make_rule([("position", "student"), ("level", "grad"), ("type", "roster"),
               ("confidentiality", "high", False)],
              [("dept_u", "dept_o")], "read"),
    # TAs maintain gradebooks of their own department, on campus only.
    make_rule([("position", "ta"), ("type", "gradebook"),
               ("location", "remote", False), ("location", "abroad", False)],
              [("dept_u", "dept_o")], "write"),
    # Instructors maintain gradebooks of their own department.
    make_rule([("position", "instructor"), ("type", "gradebook")],
              [("dept_u", "dept_o")], "write"),
    # Instructors assign non-intro exams in their own department.
    make_rule([("position", "instructor"), ("type", "exam"),
               ("course_level", "intro", False)],
              [("dept_u", "dept_o")], "assign"),
    # Chairs approve applications to departments other than their own.
    make_rule([("position", "chair"), ("type", "application")],
              [("dept_u", "dept_o", False)], "approve"),
    # Everyone but students reads rosters.
    make_rule([("position", "student", False), ("type", "roster")], [], "read"),
    # Staff read non-high-confidentiality transcripts during working hours.
    make_rule([("position", "staff"), ("type", "transcript"),
               ("time", "working"), ("confidentiality", "high", False)],
              [], "read"),
    # Deans read everything except exams.
    make_rule([("position", "dean"), ("type", "exam", False)], [], "read"),
    # Tenured hiring-committee members approve applications.
    make_rule([("tenure", "tenured"), ("committee", "hiring"),
               ("type", "application")], [], "approve"),
]


# -- healthcare ---------------------------------------------------------------

_WARDS = ["cardio", "er", "onco", "pedia"]
_TEAMS = ["alpha", "beta", "none"]

_HEALTHCARE_SCHEMA = AttributeSchema(
    user_attrs=("role", "ward_u", "senior", "on_call", "team_u"),
    object_attrs=("kind", "ward_o", "sensitivity", "owner_team", "archived"),
    session_attrs=("shift", "loc", "emergency"),
    operations=frozenset({"view", "update", "create", "discharge"}),
    ranges={
        "role": frozenset({"doctor", "nurse", "patient", "receptionist",
                           "admin"}),
        "ward_u": frozenset(_WARDS),
        "senior": frozenset({"yes", "no"}),
        "on_call": frozenset({"yes", "no"}),
        "team_u": frozenset(_TEAMS),
        "kind": frozenset({"ehr", "item", "note", "bill"}),
        "ward_o": frozenset(_WARDS),
        "sensitivity": frozenset({"low", "medium", "high"}),
        "owner_team": frozenset(_TEAMS),
        "archived": frozenset({"yes", "no"}),
        "shift": frozenset({"day", "night"}),
        "loc": frozenset({"ward", "office", "home", "mobile"}),
        "emergency": frozenset({"yes", "no"}),
    },
)


def _healthcare_user(rng) -> dict[str, str]:
    role = _pick(rng, [("doctor", 0.3), ("nurse", 0.35), ("patient", 0.15),
                       ("receptionist", 0.1), ("admin", 0.1)])
    clinical = role in ("doctor", "nurse")
    return {
        "role": role,
        "ward_u": _uniform(rng, _WARDS),
        "senior": _pick(rng, [("yes", 0.35), ("no", 0.65)]) if clinical else "no",
        "on_call": _pick(rng, [("yes", 0.3), ("no", 0.7)]) if clinical else "no",
        "team_u": _pick(rng, [("alpha", 0.4), ("beta", 0.4), ("none", 0.2)])
        if clinical else "none",
    }


def _healthcare_object(rng) -> dict[str, str]:
    kind = _pick(rng, [("ehr", 0.3), ("item", 0.3), ("note", 0.25),
                       ("bill", 0.15)])
    sensitivity = {
        "ehr": [("high", 0.5), ("medium", 0.4), ("low", 0.1)],
        "item": [("medium", 0.5), ("low", 0.3), ("high", 0.2)],
        "note": [("medium", 0.5), ("low", 0.4), ("high", 0.1)],
        "bill": [("low", 0.7), ("medium", 0.3)],
    }[kind]
    return {
        "kind": kind,
        "ward_o": _uniform(rng, _WARDS),
        "sensitivity": _pick(rng, sensitivity),
        "owner_team": _pick(rng, [("alpha", 0.4), ("beta", 0.4), ("none", 0.2)]),
        "archived": _pick(rng, [("yes", 0.25), ("no", 0.75)]),
    }


def _healthcare_session(rng) -> dict[str, str]:
    return {
        "shift": _pick(rng, [("day", 0.6), ("night", 0.4)]),
        "loc": _pick(rng, [("ward", 0.45), ("office", 0.3), ("home", 0.15),
                           ("mobile", 0.1)]),
        "emergency": _pick(rng, [("yes", 0.2), ("no", 0.8)]),
    }


_HEALTHCARE_RULES = [
    # Doctors view EHRs of their own ward.
    make_rule([("role", "doctor"), ("kind", "ehr")],
              [("ward_u", "ward_o")], "view"),
    # Doctors update EHRs of their own ward during the day shift.
    make_rule([("role", "doctor"), ("kind", "ehr"), ("shift", "day")],
              [("ward_u", "ward_o")], "update"),
    # Nurses view notes of their own ward.
    make_rule([("role", "nurse"), ("kind", "note")],
              [("ward_u", "ward_o")], "view"),
    # On-call nurses view record items in emergencies.
    make_rule([("role", "nurse"), ("on_call", "yes"), ("kind", "item"),
               ("emergency", "yes")], [], "view"),
    # Care-team members view their team's notes.
    make_rule([("kind", "note")], [("team_u", "owner_team")], "view"),
    # Receptionists create bills.
    make_rule([("role", "receptionist"), ("kind", "bill")], [], "create"),
    # Administrators discharge records.
    make_rule([("role", "admin")], [], "discharge"),
    # Senior doctors update record items.
    make_rule([("role", "doctor"), ("senior", "yes"), ("kind", "item")],
              [], "update"),
    # Doctors create notes in their own ward.
    make_rule([("role", "doctor"), ("kind", "note")],
              [("ward_u", "ward_o")], "create"),
]

_HEALTHCARE_PN_RULES = [
    # Doctors view non-archived EHRs of their own ward.
    make_rule([("role", "doctor"), ("kind", "ehr"), ("archived", "yes", False)],
              [("ward_u", "ward_o")], "view"),
    # Doctors update non-archived EHRs of their ward during the day shift.
    make_rule([("role", "doctor"), ("kind", "ehr"), ("shift", "day"),
               ("archived", "yes", False)], [("ward_u", "ward_o")], "update"),
    # Nurses view non-sensitive notes of their own ward.
    make_rule([("role", "nurse"), ("kind", "note"),
               ("sensitivity", "high", False)], [("ward_u", "ward_o")], "view"),
    # On-call nurses view record items in emergencies, except from home.
    make_rule([("role", "nurse"), ("on_call", "yes"), ("kind", "item"),
               ("emergency", "yes"), ("loc", "home", False)], [], "view"),
    # Assigned care-team members view their team's notes.
    make_rule([("kind", "note"), ("team_u", "none", False)],
              [("team_u", "owner_team")], "view"),
    # Receptionists create bills.
    make_rule([("role", "receptionist"), ("kind", "bill")], [], "create"),
    # Administrators discharge everything but bills.
    make_rule([("role", "admin"), ("kind", "bill", False)], [], "discharge"),
    # Consulting: senior doctors view notes of other wards.
    make_rule([("role", "doctor"), ("senior", "yes"), ("kind", "note")],
              [("ward_u", "ward_o", False)], "view"),
    # Doctors create notes in their own ward.
    make_rule([("role", "doctor"), ("kind", "note")],
              [("ward_u", "ward_o")], "create"),
]


# -- project management -------------------------------------------------------

_PM_DEPTS = ["eng", "fin", "ops", "sales"]
_PM_TEAMS = ["t1", "t2", "t3", "t4"]

_PM_SCHEMA = AttributeSchema(
    user_attrs=("role", "dept_u", "team_u", "seniority", "certified",
                "clearance"),
    object_attrs=("kind", "dept_o", "team_o", "status", "priority"),
    session_attrs=("loc", "time", "vpn"),
    operations=frozenset({"view", "edit", "approve", "close"}),
    ranges={
        "role": frozenset({"manager", "lead", "dev", "qa", "accountant"}),
        "dept_u": frozenset(_PM_DEPTS),
        "team_u": frozenset(_PM_TEAMS),
        "seniority": frozenset({"jr", "sr"}),
        "certified": frozenset({"yes", "no"}),
        "clearance": frozenset({"basic", "full"}),
        "kind": frozenset({"budget", "contract", "report", "schedule", "task"}),
        "dept_o": frozenset(_PM_DEPTS),
        "team_o": frozenset(_PM_TEAMS),
        "status": frozenset({"draft", "active", "closed"}),
        "priority": frozenset({"low", "high"}),
        "loc": frozenset({"office", "home", "site"}),
        "time": frozenset({"work", "off"}),
        "vpn": frozenset({"on", "off"}),
    },
)


def _pm_user(rng) -> dict[str, str]:
    role = _pick(rng, [("dev", 0.35), ("qa", 0.15), ("lead", 0.15),
                       ("manager", 0.2), ("accountant", 0.15)])
    seniority = _pick(rng, [("jr", 0.55), ("sr", 0.45)])
    return {
        "role": role,
        "dept_u": _uniform(rng, _PM_DEPTS),
        "team_u": _uniform(rng, _PM_TEAMS),
        "seniority": seniority,
        "certified": _pick(rng, [("yes", 0.4), ("no", 0.6)]),
        "clearance": _pick(rng, [("full", 0.35), ("basic", 0.65)])
        if role in ("manager", "lead", "accountant")
        else _pick(rng, [("full", 0.1), ("basic", 0.9)]),
    }


def _pm_object(rng) -> dict[str, str]:
    kind = _pick(rng, [("task", 0.35), ("schedule", 0.2), ("report", 0.2),
                       ("budget", 0.15), ("contract", 0.1)])
    return {
        "kind": kind,
        "dept_o": _uniform(rng, _PM_DEPTS),
        "team_o": _uniform(rng, _PM_TEAMS),
        "status": _pick(rng, [("draft", 0.25), ("active", 0.5),
                              ("closed", 0.25)]),
        "priority": _pick(rng, [("low", 0.45), ("high", 0.55)]),
    }


def _pm_session(rng) -> dict[str, str]:
    return {"loc": _pick(rng, [("office", 0.55), ("home", 0.3), ("site", 0.15)]),
            "time": _pick(rng, [("work", 0.7), ("off", 0.3)]),
            "vpn": _pick(rng, [("on", 0.4), ("off", 0.6)])}


_PM_RULES = [
    # Developers edit their own team's tasks.
    make_rule([("role", "dev"), ("kind", "task")], [("team_u", "team_o")],
              "edit"),
    # QA view their own team's tasks.
    make_rule([("role", "qa"), ("kind", "task")], [("team_u", "team_o")],
              "view"),
    # Leads approve their own team's tasks.
    make_rule([("role", "lead"), ("kind", "task")], [("team_u", "team_o")],
              "approve"),
    # Managers view reports of their own department.
    make_rule([("role", "manager"), ("kind", "report")],
              [("dept_u", "dept_o")], "view"),
    # Accountants edit budgets.
    make_rule([("role", "accountant"), ("kind", "budget")], [], "edit"),
    # Managers approve budgets of their own department.
    make_rule([("role", "manager"), ("kind", "budget")],
              [("dept_u", "dept_o")], "approve"),
    # Senior certified staff close contracts.
    make_rule([("seniority", "sr"), ("certified", "yes"),
               ("kind", "contract")], [], "close"),
    # Full-clearance staff view contracts.
    make_rule([("clearance", "full"), ("kind", "contract")], [], "view"),
    # Leads edit their team's schedule from the office.
    make_rule([("role", "lead"), ("kind", "schedule"), ("loc", "office")],
              [("team_u", "team_o")], "edit"),
    # Anyone views active schedules of their own department.
    make_rule([("kind", "schedule"), ("status", "active")],
              [("dept_u", "dept_o")], "view"),
    # Managers close draft reports of their own department.
    make_rule([("role", "manager"), ("kind", "report"), ("status", "draft")],
              [("dept_u", "dept_o")], "close"),
]

_PM_PN_RULES = [
    # Developers edit their own team's open tasks.
    make_rule([("role", "dev"), ("kind", "task"), ("status", "closed", False)],
              [("team_u", "team_o")], "edit"),
    # QA view their own team's tasks.
    make_rule([("role", "qa"), ("kind", "task")], [("team_u", "team_o")],
              "view"),
    # Leads approve their own team's non-closed tasks.
    make_rule([("role", "lead"), ("kind", "task"), ("status", "closed", False)],
              [("team_u", "team_o")], "approve"),
    # Managers view reports of their own department, not from home.
    make_rule([("role", "manager"), ("kind", "report"), ("loc", "home", False)],
              [("dept_u", "dept_o")], "view"),
    # Accountants edit non-closed budgets.
    make_rule([("role", "accountant"), ("kind", "budget"),
               ("status", "closed", False)], [], "edit"),
    # Managers approve budgets of their own department.
    make_rule([("role", "manager"), ("kind", "budget")],
              [("dept_u", "dept_o")], "approve"),
    # Senior certified staff close non-low-priority contracts.
    make_rule([("seniority", "sr"), ("certified", "yes"), ("kind", "contract"),
               ("priority", "low", False)], [], "close"),
    # Full-clearance staff view contracts.
    make_rule([("clearance", "full"), ("kind", "contract")], [], "view"),
    # Leads edit their team's schedule, but never off hours.
    make_rule([("role", "lead"), ("kind", "schedule"), ("time", "off", False)],
              [("team_u", "team_o")], "edit"),
    # Audit: accountants view reports of other departments.
    make_rule([("role", "accountant"), ("kind", "report")],
              [("dept_u", "dept_o", False)], "view"),
    # Managers close draft reports of their own department.
    make_rule([("role", "manager"), ("kind", "report"), ("status", "draft")],
              [("dept_u", "dept_o")], "close"),
]


_CATALOG = {
    "university": (_UNIVERSITY_SCHEMA, _UNIVERSITY_RULES,
                   (_university_user, _university_object, _university_session),
                   (80, 100, 4), 11),
    "university-pn": (_UNIVERSITY_SCHEMA, _UNIVERSITY_PN_RULES,
                      (_university_user, _university_object, _university_session),
                      (80, 100, 4), 17),
    "healthcare": (_HEALTHCARE_SCHEMA, _HEALTHCARE_RULES,
                   (_healthcare_user, _healthcare_object, _healthcare_session),
                   (60, 80, 6), 23),
    "healthcare-pn": (_HEALTHCARE_SCHEMA, _HEALTHCARE_PN_RULES,
                      (_healthcare_user, _healthcare_object, _healthcare_session),
                      (60, 80, 6), 29),
    "project-management": (_PM_SCHEMA, _PM_RULES,
                           (_pm_user, _pm_object, _pm_session), (70, 80, 4), 31),
    "project-management-pn": (_PM_SCHEMA, _PM_PN_RULES,
                              (_pm_user, _pm_object, _pm_session), (70, 80, 4), 37),
}


def builtin_policy(name: str, seed: int | None = None) -> Policy:
    """A named ground-truth policy with its generated entity population."""
    try:
        schema, rules, samplers, counts, default_seed = _CATALOG[name]
    except KeyError:
        raise KeyError(
            f"unknown builtin policy {name!r}; choose from {BUILTIN_NAMES}"
        ) from None
    user_s, object_s, session_s = samplers
    spec = UniverseSpec(
        schema=schema, n_users=counts[0], n_objects=counts[1],
        n_sessions=counts[2], seed=default_seed if seed is None else seed,
        samplers={"user": user_s, "object": object_s, "session": session_s},
    )
    policy = Policy(schema, frozenset(rules), build_universe(spec))
    policy.validate()
    return policy


def builtin_policies(seed: int | None = None) -> list[tuple[str, Policy]]:
    """All six built-in (name, policy) pairs."""
    return [(name, builtin_policy(name, seed)) for name in BUILTIN_NAMES]
