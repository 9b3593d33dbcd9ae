#!/usr/bin/env python3
"""Build the packaged task fixtures under src/scoreloop/fixtures/.

Three assessments ship with the package: a rules task (nine binary
criteria), a debugging task over block-based model code (five binary
criteria, linked to the rules context), and an engineering fair-test task
(one ordinal 0..4 score). Each gets a rubric, an assessment document, a
few-shot exemplar set with reasoning chains, prompt configs (baseline and
final), and a seeded sample response file.

Run from the repo root:  python scripts/build_fixtures.py
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import yaml

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "src" / "scoreloop" / "fixtures"

OUTPUT_SCHEMA_BINARY = {
    "type": "object",
    "required": ["criteria", "total_score"],
    "properties": {
        "criteria": {
            "type": "array",
            "description": "one entry per rubric criterion, in rubric order",
            "items": {
                "type": "object",
                "required": ["id", "reasoning", "score"],
                "properties": {
                    "id": {"type": "string"},
                    "reasoning": {"type": "string"},
                    "score": {"type": "integer"},
                },
            },
        },
        "total_score": {
            "type": "integer",
            "description": "the sum of the criterion scores",
        },
    },
}

OUTPUT_SCHEMA_ORDINAL = {
    "type": "object",
    "required": ["criteria", "total_score"],
    "properties": {
        "criteria": {
            "type": "array",
            "description": "exactly one entry, with id 'score'",
            "items": {
                "type": "object",
                "required": ["id", "reasoning", "score"],
                "properties": {
                    "id": {"type": "string"},
                    "reasoning": {"type": "string"},
                    "score": {"type": "integer"},
                },
            },
        },
        "total_score": {
            "type": "integer",
            "description": "equal to the single criterion score",
        },
    },
}


def chain(citation: str, text: str, response_parts: dict[str, str]) -> dict[str, str]:
    if not any(citation in part for part in response_parts.values()):
        raise SystemExit(f"citation not grounded: {citation!r}")
    return {"citation": citation, "text": text}


def write_yaml(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(doc, sort_keys=False, allow_unicode=True), encoding="utf-8")


def write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")


def write_jsonl(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


# ===========================================================================
# Rules task
# ===========================================================================

RULES_RUBRIC = {
    "id": "rules",
    "title": "Water runoff rules",
    "scheme": {
        "kind": "multi_label_binary",
        "criteria": [
            {"id": "R1", "description": 'Completed if statement "if rainfall is < absorption limit."', "domains": ["SCI", "COM"], "points": 1},
            {"id": "R2", "description": "Set absorption to rainfall in this rule.", "domains": ["SCI"], "points": 1},
            {"id": "R3", "description": "Set runoff to 0 in this rule.", "domains": ["SCI"], "points": 1},
            {"id": "R4", "description": 'Completed if statement "if rainfall = to absorption limit."', "domains": ["SCI", "COM"], "points": 1},
            {"id": "R5", "description": "Set absorption to rainfall OR absorption limit in this rule.", "domains": ["SCI"], "points": 1},
            {"id": "R6", "description": "Set runoff to 0 in this rule.", "domains": ["SCI"], "points": 1},
            {"id": "R7", "description": 'Completed if statement "if rainfall > than absorption limit."', "domains": ["SCI", "COM"], "points": 1},
            {"id": "R8", "description": "Set absorption to absorption limit in this rule.", "domains": ["SCI"], "points": 1},
            {"id": "R9", "description": 'Set runoff to "rainfall - absorption limit" OR "rainfall - absorption" in this rule.', "domains": ["SCI"], "points": 1},
        ],
    },
    "guidelines": [
        "Cite the relevant portion of the student's response verbatim when justifying every scoring decision, and tie the citation to the rubric criterion it addresses.",
        "The order in which the student lists the three rules must not affect scoring; match each rule to its condition by content, not by position in the response.",
        "Setting runoff to \"none\" or \"nothing\" is semantically equivalent to setting it to 0 and earns the runoff point for that rule, because a runoff of none and a runoff of zero describe the same physical situation.",
        "In the \"greater than\" rule, setting runoff to \"rainfall - absorption\" is acceptable in place of \"rainfall - absorption limit\", because absorption equals the absorption limit whenever rainfall exceeds it.",
        "The absorption and runoff points require the student to explicitly set the value; a statement that is merely consistent with the correct value (for example, that all the water soaks in) does not by itself earn the point.",
    ],
}

RULES_ASSESSMENT = {
    "id": "rules",
    "background": (
        "Students are studying what happens to rainwater that falls on a schoolyard. "
        "Each surface material (grass, asphalt, gravel) has an absorption limit: the "
        "largest amount of water, in inches, that the material can soak up during a "
        "storm. Whatever the ground does not absorb becomes runoff. The class has "
        "established that matter is conserved, so for any storm the rainfall equals "
        "the absorbed water plus the runoff. Later in the unit the students will turn "
        "these relationships into block-based computational model code, so the rules "
        "they write here should read like conditional statements that set values."
    ),
    "question": (
        "Think about how rainfall, the absorption limit of the ground material, "
        "absorption, and runoff are related during a single storm. Write three rules, "
        "one for each situation: when rainfall is less than the absorption limit, "
        "when rainfall is equal to the absorption limit, and when rainfall is greater "
        "than the absorption limit. Write each rule as an if statement that sets the "
        "value of absorption and the value of runoff."
    ),
    "gold_response": (
        "If rainfall is less than the absorption limit, then set absorption to "
        "rainfall and set runoff to 0. If rainfall is equal to the absorption limit, "
        "then set absorption to rainfall (which is the same as the absorption limit) "
        "and set runoff to 0. If rainfall is greater than the absorption limit, then "
        "set absorption to the absorption limit and set runoff to rainfall minus the "
        "absorption limit."
    ),
    "rubric": "rules",
}

RULES_PERSONA = (
    "You are a helpful teacher's assistant who helps teachers score middle school "
    "students' short answers to formative assessment questions. Score each response "
    "strictly against the rubric and the guidelines, cite the student's own words as "
    "evidence for every decision, and report your scores in the requested JSON "
    "format and nothing else."
)


def rules_exemplars() -> list[dict]:
    exemplars = []

    # ex1: unambiguous full-credit demonstration
    parts = {
        "Answer": (
            "If rainfall is less than absorption limit, set absorption to rainfall, "
            "and set runoff to 0. If rainfall is equal to absorption limit, set "
            "absorption to rainfall, and set runoff to 0. If rainfall is greater "
            "than absorption limit, set absorption to absorption limit, and set "
            "runoff to rainfall minus absorption limit."
        )
    }
    exemplars.append({
        "id": "rules-ex1",
        "kind": "ground_truth",
        "response": {"id": "rules-fs-01", "assessment_id": "rules", "parts": parts},
        "labels": {"R1": 1, "R2": 1, "R3": 1, "R4": 1, "R5": 1, "R6": 1, "R7": 1, "R8": 1, "R9": 1},
        "cot": {
            "R1": chain(
                "If rainfall is less than absorption limit",
                "The student says 'If rainfall is less than absorption limit', which completes the less-than if statement. The rubric states the student must complete the if statement comparing rainfall to the absorption limit. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R2": chain(
                "set absorption to rainfall",
                "Inside the less-than rule the student says 'set absorption to rainfall'. The rubric states absorption must be set to rainfall in this rule. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R3": chain(
                "set runoff to 0",
                "Inside the less-than rule the student says 'set runoff to 0'. The rubric states runoff must be set to 0 in this rule. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R4": chain(
                "If rainfall is equal to absorption limit",
                "The student says 'If rainfall is equal to absorption limit', which completes the equal-to if statement. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R5": chain(
                "set absorption to rainfall",
                "Inside the equal-to rule the student says 'set absorption to rainfall'. The rubric accepts setting absorption to either rainfall or the absorption limit in this rule, and rainfall qualifies. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R6": chain(
                "set runoff to 0",
                "Inside the equal-to rule the student says 'set runoff to 0', which is exactly what the rubric requires for this rule. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R7": chain(
                "If rainfall is greater than absorption limit",
                "The student says 'If rainfall is greater than absorption limit', which completes the greater-than if statement. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R8": chain(
                "set absorption to absorption limit",
                "Inside the greater-than rule the student says 'set absorption to absorption limit'. The rubric states absorption must be set to the absorption limit in this rule. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R9": chain(
                "set runoff to rainfall minus absorption limit",
                "Inside the greater-than rule the student says 'set runoff to rainfall minus absorption limit'. The rubric accepts rainfall - absorption limit (or rainfall - absorption) for runoff in this rule. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
        },
    })

    # ex2: sticking point, runoff written as "none"
    parts = {
        "Answer": (
            "If rainfall is less than the absorption limit, absorption is rainfall "
            "and runoff is none. If rainfall is equal to the absorption limit, "
            "absorption is rainfall and runoff is none. If rainfall is more than "
            "the absorption limit, absorption is the absorption limit and runoff is "
            "rainfall minus the absorption limit."
        )
    }
    exemplars.append({
        "id": "rules-ex2",
        "kind": "sticking_point",
        "response": {"id": "rules-fs-02", "assessment_id": "rules", "parts": parts},
        "labels": {"R1": 1, "R2": 1, "R3": 1, "R4": 1, "R5": 1, "R6": 1, "R7": 1, "R8": 1, "R9": 1},
        "cot": {
            "R1": chain(
                "If rainfall is less than the absorption limit",
                "The student says 'If rainfall is less than the absorption limit', completing the less-than if statement. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R2": chain(
                "absorption is rainfall",
                "Inside the less-than rule the student says 'absorption is rainfall', which explicitly sets absorption to rainfall. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R3": chain(
                "runoff is none",
                "Inside the less-than rule the student says 'runoff is none'. Per the guidelines, setting runoff to none is semantically equivalent to setting it to 0, because no water runs off in either phrasing. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R4": chain(
                "If rainfall is equal to the absorption limit",
                "The student says 'If rainfall is equal to the absorption limit', completing the equal-to if statement. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R5": chain(
                "absorption is rainfall",
                "Inside the equal-to rule the student says 'absorption is rainfall', and the rubric accepts rainfall or the absorption limit here. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R6": chain(
                "runoff is none",
                "Inside the equal-to rule the student says 'runoff is none', which the guidelines treat as equivalent to runoff of 0. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R7": chain(
                "If rainfall is more than the absorption limit",
                "The student says 'If rainfall is more than the absorption limit'; 'more than' expresses the greater-than comparison, so the if statement is complete. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R8": chain(
                "absorption is the absorption limit",
                "Inside the greater-than rule the student says 'absorption is the absorption limit', which is what the rubric requires. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R9": chain(
                "runoff is rainfall minus the absorption limit",
                "Inside the greater-than rule the student says 'runoff is rainfall minus the absorption limit', matching the rubric exactly. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
        },
    })

    # ex3: sticking point, runoff set to rainfall minus absorption
    parts = {
        "Answer": (
            "If rainfall is under the absorption limit then absorption equals "
            "rainfall and runoff equals zero. If rainfall and the absorption limit "
            "are the same then absorption equals the absorption limit and runoff "
            "equals zero. If rainfall is over the absorption limit then absorption "
            "equals the absorption limit and runoff equals rainfall minus absorption."
        )
    }
    exemplars.append({
        "id": "rules-ex3",
        "kind": "sticking_point",
        "response": {"id": "rules-fs-03", "assessment_id": "rules", "parts": parts},
        "labels": {"R1": 1, "R2": 1, "R3": 1, "R4": 1, "R5": 1, "R6": 1, "R7": 1, "R8": 1, "R9": 1},
        "cot": {
            "R1": chain(
                "If rainfall is under the absorption limit",
                "The student says 'If rainfall is under the absorption limit'; 'under' expresses less than, so the if statement is complete. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R2": chain(
                "absorption equals rainfall",
                "Inside the less-than rule the student says 'absorption equals rainfall', explicitly setting absorption. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R3": chain(
                "runoff equals zero",
                "Inside the less-than rule the student says 'runoff equals zero'. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R4": chain(
                "If rainfall and the absorption limit are the same",
                "The student says 'If rainfall and the absorption limit are the same', which expresses the equal-to comparison. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R5": chain(
                "absorption equals the absorption limit",
                "Inside the equal-to rule the student says 'absorption equals the absorption limit'. The rubric accepts rainfall or the absorption limit in this rule. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R6": chain(
                "runoff equals zero",
                "Inside the equal-to rule the student says 'runoff equals zero'. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R7": chain(
                "If rainfall is over the absorption limit",
                "The student says 'If rainfall is over the absorption limit'; 'over' expresses greater than. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R8": chain(
                "absorption equals the absorption limit",
                "Inside the greater-than rule the student says 'absorption equals the absorption limit', matching the rubric. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R9": chain(
                "runoff equals rainfall minus absorption",
                "The student says 'runoff equals rainfall minus absorption' in the greater-than rule. Per the guidelines, rainfall - absorption is acceptable in place of rainfall - absorption limit, because the two quantities are equal when rainfall exceeds the limit. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
        },
    })

    # ex4: balance instance, a description with no rules at all
    parts = {
        "Answer": (
            "The water goes into the ground until the ground cannot hold any more, "
            "and then the rest of it runs off the schoolyard."
        )
    }
    no_condition = (
        "The student says '{cite}', which describes the phenomenon but never writes "
        "the {cond} if statement comparing rainfall to the absorption limit. Based "
        "on the rubric, the student earned a score of 0."
    )
    no_set = (
        "The student says '{cite}', but never explicitly sets {var} in the {cond} "
        "rule; per the guidelines a statement that is merely consistent with the "
        "correct value does not earn the point. Based on the rubric, the student "
        "earned a score of 0."
    )
    cite_a = "The water goes into the ground until the ground cannot hold any more"
    cite_b = "the rest of it runs off the schoolyard"
    exemplars.append({
        "id": "rules-ex4",
        "kind": "balance",
        "response": {"id": "rules-fs-04", "assessment_id": "rules", "parts": parts},
        "labels": {f"R{i}": 0 for i in range(1, 10)},
        "cot": {
            "R1": chain(cite_a, no_condition.format(cite=cite_a, cond="less-than"), parts),
            "R2": chain(cite_a, no_set.format(cite=cite_a, var="absorption", cond="less-than"), parts),
            "R3": chain(cite_b, no_set.format(cite=cite_b, var="runoff", cond="less-than"), parts),
            "R4": chain(cite_a, no_condition.format(cite=cite_a, cond="equal-to"), parts),
            "R5": chain(cite_a, no_set.format(cite=cite_a, var="absorption", cond="equal-to"), parts),
            "R6": chain(cite_b, no_set.format(cite=cite_b, var="runoff", cond="equal-to"), parts),
            "R7": chain(cite_b, no_condition.format(cite=cite_b, cond="greater-than"), parts),
            "R8": chain(cite_a, no_set.format(cite=cite_a, var="absorption", cond="greater-than"), parts),
            "R9": chain(cite_b, no_set.format(cite=cite_b, var="runoff", cond="greater-than"), parts),
        },
    })

    # ex5: the promoted instance; implicit values stated without being set
    parts = {
        "Answer": (
            "If rainfall is equal to absorption limit, then, there is no runoff and "
            "all is absorbed.\n\nIf rainfall is less than absorption limit, then, "
            "there is no runoff and all is absorbed.\n\nIf rainfall is greater than "
            "absorption limit, then, absorbed is absorption limit and runoff is all "
            "that wasn't absorbed"
        )
    }
    exemplars.append({
        "id": "rules-ex5",
        "kind": "active_learning",
        "response": {"id": "rules-fs-05", "assessment_id": "rules", "parts": parts},
        "labels": {"R1": 1, "R2": 0, "R3": 1, "R4": 1, "R5": 0, "R6": 1, "R7": 1, "R8": 1, "R9": 0},
        "cot": {
            "R1": chain(
                "If rainfall is less than absorption limit",
                "The student says 'If rainfall is less than absorption limit', completing the less-than if statement; the order the rules appear in does not matter per the guidelines. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R2": chain(
                "all is absorbed",
                "The student says 'all is absorbed' inside the less-than condition. While this statement is true (all the rainfall is absorbed when rainfall is below the limit), the student does not explicitly set absorption equal to rainfall in the less-than condition per the rubric's guidance. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "R3": chain(
                "there is no runoff",
                "The student says 'there is no runoff' inside the less-than condition. Per the guidelines, no runoff is semantically equivalent to a runoff of 0, so the runoff value is set. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R4": chain(
                "If rainfall is equal to absorption limit",
                "The student says 'If rainfall is equal to absorption limit', completing the equal-to if statement. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R5": chain(
                "all is absorbed",
                "The student says 'all is absorbed' inside the equal-to condition. While this statement is true, the student does not explicitly set absorption equal to either rainfall or the absorption limit in the equal-to condition per the rubric's guidance. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "R6": chain(
                "there is no runoff",
                "The student says 'there is no runoff' inside the equal-to condition, which the guidelines accept as runoff set to 0. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R7": chain(
                "If rainfall is greater than absorption limit",
                "The student says 'If rainfall is greater than absorption limit', completing the greater-than if statement. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R8": chain(
                "absorbed is absorption limit",
                "The student says 'absorbed is absorption limit' inside the greater-than condition, which explicitly sets absorption to the absorption limit. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "R9": chain(
                "runoff is all that wasn't absorbed",
                "The student says 'runoff is all that wasn't absorbed' inside the greater-than condition. While this statement is true (everything not absorbed becomes runoff), the student does not explicitly set runoff equal to either rainfall - absorption limit or rainfall - absorption per the rubric's guidance. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
        },
    })
    return exemplars


# ===========================================================================
# Debugging task
# ===========================================================================

DEBUG_RUBRIC = {
    "id": "debugging",
    "title": "Model debugging errors",
    "scheme": {
        "kind": "multi_label_binary",
        "criteria": [
            {"id": "D1", "description": '"Set absorption limit" should be before the first conditional statement.', "domains": ["COM"], "points": 1},
            {"id": "D2", "description": 'In the "less than" condition, rainfall should be compared to the absorption limit.', "domains": ["SCI", "COM"], "points": 1},
            {"id": "D3", "description": 'In the "less than" condition, absorption should be set to rainfall.', "domains": ["SCI"], "points": 1},
            {"id": "D4", "description": 'The "greater than" condition should not be embedded in the less than condition, but connected to it.', "domains": ["COM"], "points": 1},
            {"id": "D5", "description": 'In the "greater than" condition, absorption should be set to absorption limit, not the other way around.', "domains": ["SCI", "COM"], "points": 1},
        ],
    },
    "guidelines": [
        "Cite the relevant portion of the student's response verbatim when justifying every scoring decision, and tie the citation to the rubric criterion and, where possible, to the specific line of the model code it concerns.",
        "To earn credit for an error, the student must identify the exact block unambiguously. Acceptable identifiers include the line number from the code comments, the block color, or the block's position relative to other code (for example, 'the absorption block in the first if statement'). A bare mention such as 'the absorption block is wrong' is ambiguous, because several absorption blocks appear in the model, and earns no credit.",
        "Exception to the previous guideline: for the swapped absorption and absorption limit error, saying the two blocks should be 'swapped' or 'flipped' is sufficient on its own, because only one place in the code requires that swap, so the reference cannot be ambiguous.",
        "Absorption and absorption limit are distinct blocks in this model. A student who writes 'absorption' when the error concerns the absorption limit block, or 'absorption limit' when the error concerns the absorption block, has not identified the error and does not earn the point.",
        "Students may refer to an if statement as a 'rule'. Rule numbers follow the order of the rules in the earlier rules assessment, so 'the first rule' is the equal-to condition, 'the second rule' is the less-than condition, and 'the third rule' is the greater-than condition. Line numbers refer to the comments at the end of each code line.",
        "Award each error's point independently. A response does not need to list the errors in any particular order, and identifying one error never requires identifying another.",
    ],
}

DEBUG_LISTING = {
    "lines": [
        {"line": 1, "indent": 0, "text": "when [Simulation] is clicked"},
        {"line": 2, "indent": 0, "text": "set [Rainfall (inch)] to [1]"},
        {"line": 3, "indent": 0, "text": "if [Rainfall (inch)] [=] [Absorption Limit (inch)]", "color": "green"},
        {"line": 4, "indent": 1, "text": "set [Absorption (inch)] to [Rainfall (inch)]"},
        {"line": 5, "indent": 1, "text": "set [Runoff (inch)] to [0]"},
        {"line": 6, "indent": 0, "text": "set [Absorption Limit (inch)] to [Absorption Limit of Selected Material]"},
        {"line": 7, "indent": 0, "text": "if [Rainfall (inch)] [<] [Absorption (inch)]", "color": "green"},
        {"line": 8, "indent": 1, "text": "set [Absorption (inch)] to [Absorption Limit (inch)]"},
        {"line": 9, "indent": 1, "text": "set [Runoff (inch)] to [0]"},
        {"line": 10, "indent": 1, "text": "if [Rainfall (inch)] [>] [Absorption Limit (inch)]", "color": "green"},
        {"line": 11, "indent": 2, "text": "set [Absorption Limit (inch)] to [Absorption (inch)]"},
        {"line": 12, "indent": 2, "text": "set [Runoff (inch)] to [[Rainfall (inch)] [-] [Absorption Limit (inch)]]", "color": "green"},
    ]
}

DEBUG_ASSESSMENT = {
    "id": "debugging",
    "background": (
        "Students have learned to build a computational model of schoolyard water "
        "runoff out of code blocks. The model keeps four quantities: rainfall, the "
        "absorption limit of the selected ground material, absorption, and runoff. "
        "A correct model first sets the rainfall for the storm and the absorption "
        "limit of the selected material, and then uses three conditional statements, "
        "one per rule from the earlier rules assessment, to set absorption and "
        "runoff for the cases where rainfall is equal to, less than, or greater "
        "than the absorption limit. In a correct model the three conditionals sit "
        "one after another at the same level, so that every storm is checked "
        "against every rule: the equal-to rule sets absorption to rainfall and "
        "runoff to 0; the less-than rule compares rainfall to the absorption limit "
        "and sets absorption to rainfall and runoff to 0; and the greater-than "
        "rule sets absorption to the absorption limit and runoff to rainfall minus "
        "the absorption limit. A fictional classmate has built the model shown "
        "below, and it contains exactly five errors: a setup block in the wrong "
        "position, a comparison against the wrong quantity, two assignments of the "
        "wrong value, and one conditional nested where it should not be. Students "
        "were asked to find all five. They see the model as colored blocks in the "
        "modeling environment; the code below is the same model written out as "
        "text, one line per block, with the nesting shown by indentation."
    ),
    "question": (
        "A classmate built the computational model shown here to compute the "
        "absorption and the runoff for a storm falling on the schoolyard. The model "
        "contains five errors. Identify each of the five errors and describe how "
        "you would fix it. Be specific about which block you mean: you can point to "
        "a block by its line number, its color, or where it sits relative to other "
        "blocks."
    ),
    "gold_response": (
        "First, the set absorption limit block on line 6 is in the wrong place; it "
        "must come before the first if statement on line 3, because every rule "
        "compares rainfall against the absorption limit. Second, the less-than if "
        "statement on line 7 compares rainfall to absorption, but it should compare "
        "rainfall to the absorption limit. Third, line 8 sets absorption to the "
        "absorption limit inside the less-than condition; when rainfall is below "
        "the limit, absorption should be set to rainfall instead. Fourth, the "
        "greater-than if statement on line 10 is nested inside the less-than "
        "condition; it should be pulled out and connected after it, so the model "
        "checks the third rule even when the second rule is false. Fifth, line 11 "
        "has absorption and absorption limit swapped: it sets the absorption limit "
        "to absorption, but it should set absorption to the absorption limit."
    ),
    "rubric": "debugging",
    "linked_context": ["rules"],
    "code_listing": DEBUG_LISTING,
}

DEBUG_PERSONA = (
    "You are a helpful teacher's assistant who helps teachers score middle school "
    "students' short answers to formative assessment questions about a block-based "
    "computational model. The model code has been written out for you as text with "
    "line numbers. Score each response strictly against the rubric and the "
    "guidelines, cite the student's own words as evidence for every decision, "
    "reference code lines when they clarify a decision, and report your scores in "
    "the requested JSON format and nothing else."
)


def _extend_chain(cot: dict[str, dict[str, str]], cid: str, note: str) -> None:
    """Insert an elaboration before the chain's closing verdict sentence."""
    text = cot[cid]["text"]
    marker = " Based on the rubric,"
    at = text.rfind(marker)
    if at < 0:
        raise SystemExit(f"chain for {cid} has no verdict sentence")
    cot[cid]["text"] = text[:at] + " " + note + text[at:]


# Per-chain elaborations for the model-debugging exemplars. The scoring
# walkthroughs for this task spell out how each response maps onto the code,
# which is what teaches the model to track lines, rules, and block names.
DEBUG_CHAIN_NOTES = {
    ("debug-ex1", "D1"): (
        "In the model as written, lines 3 through 5 run the equal-to rule while "
        "the absorption limit still holds whatever value it started with, so the "
        "first comparison is made against an unset quantity. Placing the set "
        "absorption limit block above line 3, as the student proposes, is what "
        "makes all three rule comparisons meaningful, and it matches the order a "
        "correct model uses: first the storm's rainfall, then the material's "
        "limit, then the three rules."
    ),
    ("debug-ex1", "D2"): (
        "In the code, line 7 reads rainfall against absorption, and absorption is "
        "a computed output of the model rather than a property of the ground "
        "material, so the comparison does not express the second rule from the "
        "rules assessment. Comparing rainfall to the absorption limit, as the "
        "student proposes, is the correct form of the less-than condition."
    ),
    ("debug-ex1", "D3"): (
        "When rainfall is below the limit the ground can soak up the entire "
        "storm, so absorption must equal rainfall. As written, line 8 instead "
        "credits the ground with its full absorption limit even though less rain "
        "than that fell, which would overstate absorption and understate runoff "
        "in every storm the less-than rule handles."
    ),
    ("debug-ex1", "D4"): (
        "As written, the greater-than check on line 10 can only run when the "
        "less-than condition on line 7 is true, which is exactly the situation "
        "in which the greater-than check can never succeed. Pulling the block "
        "out so it attaches after the less-than conditional, as the student "
        "describes, restores three separate rules that each get their turn."
    ),
    ("debug-ex1", "D5"): (
        "Line 11 as written modifies the absorption limit, which is a fixed "
        "property of the selected material and should never be assigned by a "
        "rule. The corrected block assigns absorption from the absorption limit, "
        "which is what the third rule requires once the ground is saturated, and "
        "the student states that direction explicitly."
    ),
    ("debug-ex2", "D1"): (
        "To earn the D1 point the student would have to locate the set "
        "absorption limit block on line 6 and say that it belongs before the "
        "first if statement on line 3; no part of this response discusses where "
        "that block sits in the script."
    ),
    ("debug-ex2", "D4"): (
        "The phrase 'it should be under it' also shows the student knows the fix "
        "is to attach the conditional after the enclosing one rather than delete "
        "it, which matches the connected-but-not-embedded wording of the "
        "criterion."
    ),
    ("debug-ex2", "D5"): (
        "The swap exception in the guidelines does not rescue this response "
        "because the student never describes a swap; it only calls an absorption "
        "block wrong, which leaves both the block and the fix unidentified."
    ),
    ("debug-ex3", "D1"): (
        "Identifying the top of the script as the proper place also shows the "
        "student understands why the placement matters: every rule's comparison "
        "depends on the absorption limit having been set first."
    ),
    ("debug-ex3", "D2"): (
        "To address D2 the student would have to point at the comparison inside "
        "the less-than if statement on line 7 and say rainfall belongs against "
        "the absorption limit there; discussing what line 8 assigns does not do "
        "that."
    ),
    ("debug-ex3", "D3"): (
        "Had the student written that on line 8 absorption should be set to "
        "rainfall, the point would have been earned. The conflation rule exists "
        "because the model treats absorption and absorption limit as different "
        "variables, and a fix that edits the wrong one would leave the actual "
        "error in place."
    ),
    ("debug-ex3", "D4"): (
        "Scoring each error independently per the guidelines, the correct D1 "
        "identification earlier in the response has no bearing on whether the "
        "nesting error was found."
    ),
    ("debug-ex3", "D5"): (
        "Neither sentence describes the greater-than condition or a swap, and the "
        "swap exception only applies when the student actually says the two "
        "blocks should change places."
    ),
    ("debug-ex4", "D2"): (
        "Line 7 is the less-than conditional, and the student's phrasing names "
        "both the wrong quantity (absorption) and the right one (the absorption "
        "limit), which is a complete identification of the comparison error and "
        "its fix."
    ),
    ("debug-ex4", "D5"): (
        "'Switched around' describes the swap, and with the line number given "
        "there is no ambiguity about which pair of blocks is meant, so the "
        "response would earn the point even without the swap exception in the "
        "guidelines."
    ),
    ("debug-ex5", "D1"): (
        "The four errors the student does identify all concern the contents of "
        "the rules; the placement of the set absorption limit block on line 6 is "
        "a separate, fifth error that this response never reaches."
    ),
    ("debug-ex5", "D2"): (
        "Naming the quantity that should appear in the comparison, and the "
        "quantity that wrongly appears there now, leaves no doubt about which "
        "block the student means even though no line number is given."
    ),
    ("debug-ex5", "D3"): (
        "This matches the science of the second rule: when less rain falls than "
        "the ground can hold, the ground absorbs exactly the rainfall, so the "
        "absorption block inside that rule must be set from rainfall."
    ),
    ("debug-ex5", "D4"): (
        "The student's wording shows both halves of the criterion: the embedding "
        "is wrong ('should not be stuck inside') and the fix is to connect the "
        "conditional afterward ('it goes after it')."
    ),
    ("debug-ex5", "D5"): (
        "Describing the swap and then stating the corrected direction, absorption "
        "set to the absorption limit, satisfies the criterion fully; the swap "
        "exception in the guidelines would also have covered a bare 'they are "
        "swapped'."
    ),
    ("debug-ex6", "D1"): (
        "Saying the block 'has to be the first thing before any of the if "
        "statements' gives the same fix the rubric describes, and the line "
        "number removes any ambiguity about which block the student means."
    ),
}


# What a response must do to earn each debugging point; quoted inside the
# no-credit chains so the model learns the miss as well as the hit.
DEBUG_REQUIREMENTS = {
    "D1": (
        "To earn D1 a response must say that the set absorption limit block, on "
        "line 6, belongs before the first if statement on line 3."
    ),
    "D2": (
        "To earn D2 a response must point at the less-than if statement on line 7 "
        "and say rainfall belongs in comparison with the absorption limit there, "
        "not with absorption."
    ),
    "D3": (
        "To earn D3 a response must say that inside the less-than rule, on line 8, "
        "absorption should be set to rainfall rather than to the absorption limit."
    ),
    "D4": (
        "To earn D4 a response must say that the greater-than if statement on "
        "line 10 should not be nested inside the less-than rule but connected "
        "after it."
    ),
    "D5": (
        "To earn D5 a response must say that absorption and the absorption limit "
        "on line 11 should be swapped, so absorption is set to the absorption "
        "limit."
    ),
}


def debug_exemplars() -> list[dict]:
    exemplars = []

    # ex1: all five errors, fully identified
    parts = {
        "Answer": (
            "The set absorption limit of the selected material block on line 6 is "
            "in the wrong place, it needs to go above the first if statement on "
            "line 3. On line 7 the less than rule compares rainfall to absorption "
            "when it should compare rainfall to the absorption limit. On line 8 it "
            "sets absorption to the absorption limit but in the less than rule "
            "absorption should be set to rainfall. The third if statement on line "
            "10 is inside the second if statement and it should be attached "
            "underneath it instead. On line 11 the absorption and absorption limit "
            "blocks are swapped, absorption should be set to absorption limit."
        )
    }
    exemplars.append({
        "id": "debug-ex1",
        "kind": "ground_truth",
        "response": {"id": "debug-fs-01", "assessment_id": "debugging", "parts": parts},
        "labels": {"D1": 1, "D2": 1, "D3": 1, "D4": 1, "D5": 1},
        "cot": {
            "D1": chain(
                "block on line 6 is in the wrong place, it needs to go above the first if statement on line 3",
                "The student says the set absorption limit 'block on line 6 is in the wrong place, it needs to go above the first if statement on line 3'. The line number makes the block unambiguous, and moving it before the first conditional is exactly the fix the D1 rubric criterion describes. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D2": chain(
                "On line 7 the less than rule compares rainfall to absorption when it should compare rainfall to the absorption limit",
                "The student says 'On line 7 the less than rule compares rainfall to absorption when it should compare rainfall to the absorption limit'. Line 7 is the less-than condition, the student identifies the block by line number, and the described fix matches the D2 rubric criterion. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D3": chain(
                "On line 8 it sets absorption to the absorption limit but in the less than rule absorption should be set to rainfall",
                "The student says 'On line 8 it sets absorption to the absorption limit but in the less than rule absorption should be set to rainfall'. The student names the exact line inside the less-than condition and gives the correct fix per the D3 rubric criterion, and does not conflate absorption with the absorption limit. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D4": chain(
                "The third if statement on line 10 is inside the second if statement and it should be attached underneath it instead",
                "The student says 'The third if statement on line 10 is inside the second if statement and it should be attached underneath it instead'. Per the guidelines the third if statement is the greater-than condition and the second is the less-than condition, so this identifies the improper nesting and the fix the D4 rubric criterion requires. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D5": chain(
                "On line 11 the absorption and absorption limit blocks are swapped, absorption should be set to absorption limit",
                "The student says 'On line 11 the absorption and absorption limit blocks are swapped, absorption should be set to absorption limit'. This is the swap inside the greater-than condition that the D5 rubric criterion describes, identified by line number and stated in the correct direction. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
        },
    })

    # ex2: sticking point, ambiguous block references earn nothing
    parts = {
        "Answer": (
            "The absorption block is wrong. Also the last if statement should not "
            "be inside the second one, it should be under it."
        )
    }
    ambiguous = (
        "The student says 'The absorption block is wrong'. Several blocks in the "
        "model involve absorption (lines 4, 7, 8, and 11), and the student gives no "
        "line number, color, or position that would tell us which one is meant, so "
        "per the guidelines the reference is ambiguous and cannot earn the {cid} "
        "point. The response would have earned credit had it said, for example, "
        "'the absorption block in the second if statement', or pointed at a line "
        "number, as the guidelines describe; without such an anchor the scorer "
        "cannot tell whether the student found this error or a different one. "
        "{req} "
        "Based on the rubric, the student earned a score of 0."
    )
    exemplars.append({
        "id": "debug-ex2",
        "kind": "sticking_point",
        "response": {"id": "debug-fs-02", "assessment_id": "debugging", "parts": parts},
        "labels": {"D1": 0, "D2": 0, "D3": 0, "D4": 1, "D5": 0},
        "cot": {
            "D1": chain(
                "The absorption block is wrong",
                "The student says 'The absorption block is wrong', which never mentions the set absorption limit block or where it should sit in the code, and so does not address the D1 rubric criterion. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "D2": chain("The absorption block is wrong", ambiguous.format(cid="D2", req=DEBUG_REQUIREMENTS["D2"]), parts),
            "D3": chain("The absorption block is wrong", ambiguous.format(cid="D3", req=DEBUG_REQUIREMENTS["D3"]), parts),
            "D4": chain(
                "the last if statement should not be inside the second one, it should be under it",
                "The student says 'the last if statement should not be inside the second one, it should be under it'. Only one if statement in the model is nested inside another, so the reference is unambiguous even without a line number, and the fix matches the D4 rubric criterion. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D5": chain(
                "The absorption block is wrong",
                "The student says 'The absorption block is wrong' but never says that absorption and the absorption limit should be swapped, and the ambiguous reference cannot be tied to line 11. The swap exception in the guidelines does not apply because the student never describes a swap. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
        },
    })

    # ex3: sticking point, conflating absorption with absorption limit
    parts = {
        "Answer": (
            "The set absorption limit block on line 6 should be at the top before "
            "the first if statement. Also on line 8 the absorption limit should be "
            "set to rainfall."
        )
    }
    exemplars.append({
        "id": "debug-ex3",
        "kind": "sticking_point",
        "response": {"id": "debug-fs-03", "assessment_id": "debugging", "parts": parts},
        "labels": {"D1": 1, "D2": 0, "D3": 0, "D4": 0, "D5": 0},
        "cot": {
            "D1": chain(
                "The set absorption limit block on line 6 should be at the top before the first if statement",
                "The student says 'The set absorption limit block on line 6 should be at the top before the first if statement'. The block is identified by line number and the fix is the one the D1 rubric criterion requires. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D2": chain(
                "on line 8 the absorption limit should be set to rainfall",
                "The student's only other statement is 'on line 8 the absorption limit should be set to rainfall', which concerns line 8, not the comparison on line 7, so the D2 error is not addressed. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "D3": chain(
                "on line 8 the absorption limit should be set to rainfall",
                "The student says 'on line 8 the absorption limit should be set to rainfall'. Line 8 sets the absorption block, not the absorption limit block, and per the guidelines absorption and absorption limit are distinct blocks that may not be conflated. Because the student names the wrong block, the error is not correctly identified. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "D4": chain(
                "The set absorption limit block on line 6 should be at the top before the first if statement",
                "Nothing in the response mentions the nesting of the greater-than condition; the student only discusses line 6 and line 8. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "D5": chain(
                "on line 8 the absorption limit should be set to rainfall",
                "The student never says that absorption and the absorption limit should be swapped inside the greater-than condition; the remark about line 8 concerns the less-than condition. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
        },
    })

    # ex4: positive demonstration of line-number references
    parts = {
        "Answer": (
            "On line 7, rainfall should be compared to the absorption limit instead "
            "of absorption. On line 11, absorption and absorption limit are "
            "switched around."
        )
    }
    not_mentioned = (
        "The student only discusses lines 7 and 11, and nothing in the response "
        "addresses the {what}. Scoring each error independently per the "
        "guidelines, the two errors the student did identify have no bearing on "
        "this one, and an unaddressed error simply earns no point. {req} Based on "
        "the rubric, the student earned a score of 0."
    )
    exemplars.append({
        "id": "debug-ex4",
        "kind": "ground_truth",
        "response": {"id": "debug-fs-04", "assessment_id": "debugging", "parts": parts},
        "labels": {"D1": 0, "D2": 1, "D3": 0, "D4": 0, "D5": 1},
        "cot": {
            "D1": chain(
                "On line 7, rainfall should be compared to the absorption limit instead of absorption",
                not_mentioned.format(what="placement of the set absorption limit block that the D1 rubric criterion concerns", req=DEBUG_REQUIREMENTS["D1"]),
                parts,
            ),
            "D2": chain(
                "On line 7, rainfall should be compared to the absorption limit instead of absorption",
                "The student says 'On line 7, rainfall should be compared to the absorption limit instead of absorption'. The line number identifies the less-than condition unambiguously and the fix matches the D2 rubric criterion exactly. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D3": chain(
                "On line 11, absorption and absorption limit are switched around",
                not_mentioned.format(what="value set by the absorption block on line 8 that the D3 rubric criterion concerns", req=DEBUG_REQUIREMENTS["D3"]),
                parts,
            ),
            "D4": chain(
                "On line 11, absorption and absorption limit are switched around",
                not_mentioned.format(what="nesting of the greater-than condition that the D4 rubric criterion concerns", req=DEBUG_REQUIREMENTS["D4"]),
                parts,
            ),
            "D5": chain(
                "On line 11, absorption and absorption limit are switched around",
                "The student says 'On line 11, absorption and absorption limit are switched around'. The line number points at the swap inside the greater-than condition, and describing the two blocks as switched is the fix the D5 rubric criterion describes. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
        },
    })

    # ex5: balance, four of five errors (misses D1)
    parts = {
        "Answer": (
            "In the second rule the rainfall needs to be compared with the "
            "absorption limit, not with absorption. In the second rule absorption "
            "has to be set to rainfall instead of the absorption limit. The greater "
            "than if statement should not be stuck inside the less than if "
            "statement, it goes after it. In the greater than rule the absorption "
            "and absorption limit have to be swapped so absorption is set to "
            "absorption limit."
        )
    }
    exemplars.append({
        "id": "debug-ex5",
        "kind": "balance",
        "response": {"id": "debug-fs-05", "assessment_id": "debugging", "parts": parts},
        "labels": {"D1": 0, "D2": 1, "D3": 1, "D4": 1, "D5": 1},
        "cot": {
            "D1": chain(
                "In the second rule the rainfall needs to be compared with the absorption limit",
                "Nothing in the response mentions where the set absorption limit block should sit; the student discusses the rules' contents only, so the D1 error is unaddressed. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "D2": chain(
                "In the second rule the rainfall needs to be compared with the absorption limit, not with absorption",
                "The student says 'In the second rule the rainfall needs to be compared with the absorption limit, not with absorption'. Per the guidelines the second rule is the less-than condition, so the block is identified by position and the fix matches the D2 rubric criterion. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D3": chain(
                "In the second rule absorption has to be set to rainfall instead of the absorption limit",
                "The student says 'In the second rule absorption has to be set to rainfall instead of the absorption limit', which places the error inside the less-than condition and gives the correct fix per the D3 rubric criterion. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D4": chain(
                "The greater than if statement should not be stuck inside the less than if statement, it goes after it",
                "The student says 'The greater than if statement should not be stuck inside the less than if statement, it goes after it', which is precisely the nesting error and fix of the D4 rubric criterion. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D5": chain(
                "In the greater than rule the absorption and absorption limit have to be swapped so absorption is set to absorption limit",
                "The student says 'In the greater than rule the absorption and absorption limit have to be swapped so absorption is set to absorption limit', identifying the swap in the greater-than condition in the correct direction per the D5 rubric criterion. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
        },
    })

    # ex6: balance, only the misplaced absorption limit
    parts = {
        "Answer": (
            "They set the absorption limit in the middle of the code on line 6 but "
            "it has to be the first thing before any of the if statements. I think "
            "the rest of it is right."
        )
    }
    rest_right = (
        "The student says 'I think the rest of it is right', so the response takes "
        "a position that no further errors exist and the {cid} error goes "
        "unidentified. Declaring the remaining code correct is not a hedge the "
        "scorer can read through: the rubric awards each point for identifying a "
        "specific error, and this response identifies only the misplaced "
        "absorption limit block. {req} Based on the rubric, the student earned a "
        "score of 0."
    )
    exemplars.append({
        "id": "debug-ex6",
        "kind": "balance",
        "response": {"id": "debug-fs-06", "assessment_id": "debugging", "parts": parts},
        "labels": {"D1": 1, "D2": 0, "D3": 0, "D4": 0, "D5": 0},
        "cot": {
            "D1": chain(
                "They set the absorption limit in the middle of the code on line 6 but it has to be the first thing before any of the if statements",
                "The student says 'They set the absorption limit in the middle of the code on line 6 but it has to be the first thing before any of the if statements'. The line number identifies the block and the fix is the one the D1 rubric criterion requires. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
            "D2": chain("I think the rest of it is right", rest_right.format(cid="D2", req=DEBUG_REQUIREMENTS["D2"]), parts),
            "D3": chain("I think the rest of it is right", rest_right.format(cid="D3", req=DEBUG_REQUIREMENTS["D3"]), parts),
            "D4": chain("I think the rest of it is right", rest_right.format(cid="D4", req=DEBUG_REQUIREMENTS["D4"]), parts),
            "D5": chain("I think the rest of it is right", rest_right.format(cid="D5", req=DEBUG_REQUIREMENTS["D5"]), parts),
        },
    })

    # ex7: the candidate whose promotion overflowed the budget; shipped as a
    # document but never activated in a config
    parts = {
        "Answer": (
            "They did not put in the absorption limit.\n\nabsorption and absorption "
            "limit are flipped.\n\nthe second if statement needs to be under the "
            "first."
        )
    }
    exemplars.append({
        "id": "debug-ex7",
        "kind": "active_learning",
        "response": {"id": "debug-fs-07", "assessment_id": "debugging", "parts": parts},
        "labels": {"D1": 0, "D2": 0, "D3": 0, "D4": 0, "D5": 1},
        "cot": {
            "D1": chain(
                "They did not put in the absorption limit",
                "The student says 'They did not put in the absorption limit'. This is incorrect: the code actually does set the absorption limit, though incorrectly placed on line 6; the error is that it should have been set prior to the first if statement on line 3. Because the student does not identify that the absorption limit is initially set in the wrong part of the code, or that it should be set before the first if statement per the D1 rubric criterion, the student cannot be awarded a point for D1. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "D2": chain(
                "They did not put in the absorption limit",
                "Nothing in the response concerns the comparison inside the less-than condition on line 7; the student's statements address the absorption limit's presence, a swap, and the nesting of if statements. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "D3": chain(
                "absorption and absorption limit are flipped",
                "The only statement about absorption values is 'absorption and absorption limit are flipped', which describes the swap in the greater-than condition rather than the value set inside the less-than condition on line 8. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "D4": chain(
                "the second if statement needs to be under the first",
                "The student says 'the second if statement needs to be under the first'. Saying that the second (less-than) conditional needs to be under the first (equal-to) conditional is incorrect: it is the third (greater-than) conditional that needs to be attached to, but not inside, the second (less-than) conditional. Because the student did not identify that the greater-than conditional is incorrectly nested inside the less-than conditional, or that the greater-than conditional should be connected to the less-than conditional but not inside it pursuant to the D4 rubric criterion, the student does not earn a point for D4. Based on the rubric, the student earned a score of 0.",
                parts,
            ),
            "D5": chain(
                "absorption and absorption limit are flipped",
                "The student says 'absorption and absorption limit are flipped'. While the guidelines normally require knowing the exact piece of code the student is referring to before awarding a point, there is only one part of the code where the absorption and absorption limit blocks need to be switched to correct an error, so in this case we can assume the student is referring to the blocks inside the greater-than condition on line 11. As such, the student correctly identifies that absorption and absorption limit should be swapped, that is, absorption should be set to the absorption limit, per the D5 rubric criterion and the swap exception in the guidelines. Based on the rubric, the student earned a score of 1.",
                parts,
            ),
        },
    })
    for ex in exemplars:
        for (ex_id, cid), note in DEBUG_CHAIN_NOTES.items():
            if ex_id == ex["id"]:
                _extend_chain(ex["cot"], cid, note)
    return exemplars


# ===========================================================================
# Engineering task
# ===========================================================================

ENG_RUBRIC = {
    "id": "engineering",
    "title": "Fair-test design comparison",
    "scheme": {
        "kind": "multi_class_ordinal",
        "min": 0,
        "max": 4,
        "levels": {
            "4": (
                "Student explains that (1) the designs cannot be compared because "
                "different rainfall values were used to test each one, and (2) the "
                "runoff comparisons will not be \"fair.\" The student does not have "
                "to explicitly use the word \"fair\" to receive credit; he or she "
                "can indicate that the tests are not fair by mentioning that the "
                "two tests are uneven, inconsistent, impossible to compare, etc."
            ),
            "3": (
                "Student explains the designs cannot be compared because different "
                "rainfall values were used to test each one."
            ),
            "2": (
                "Student explains the designs cannot be compared because both tests "
                "violate design constraints, demonstrating an understanding of "
                "constraint satisfaction but not the need for fair tests."
            ),
            "1": (
                "Student identifies that the designs cannot be compared but does "
                "not provide reasoning."
            ),
            "0": (
                "Student answers \"yes\" that both designs can be compared fairly."
            ),
        },
    },
    "guidelines": [
        "Cite the relevant portion of the student's response verbatim when justifying every scoring decision, and tie the citation to the rubric level it supports.",
        "When a response satisfies more than one scoring condition in the rubric, award the highest qualifying point value.",
        "A general understanding of the engineering constraint trade-offs qualifies for 2 points even when the student does not name a specific constraint; naming specific constraints (cost, runoff, accessible squares) also qualifies.",
    ],
}

ENG_ASSESSMENT = {
    "id": "engineering",
    "background": (
        "Students are redesigning the schoolyard's surface materials so that a "
        "storm produces as little runoff as possible while the design still "
        "satisfies the engineering constraints: the total cost must stay under "
        "budget, the runoff must stay under the allowed amount, and enough squares "
        "must remain accessible. Students evaluate candidate designs by running "
        "them in the computational model: the rainfall for the test is the input, "
        "and the model reports the cost and the runoff. A fair comparison between "
        "two designs requires testing both under the same conditions, which here "
        "means the same rainfall input. Morgan's two design tests are reported as "
        "follows. Design 1: tested with 2 inches of rainfall, cost $540, runoff "
        "1.4 inches. Design 2: tested with 4 inches of rainfall, cost $420, runoff "
        "2.9 inches."
    ),
    "question": (
        "A fictitious student, Morgan, has created two different designs. Morgan "
        "wants to test both of her designs to see which one is better (the two "
        "design tests and their results are reported above). Can Morgan tell which "
        "design is better based on these tests? Explain why or why not."
    ),
    "gold_response": (
        "No. Morgan used different rainfall values to test the two designs (2 "
        "inches for one and 4 inches for the other), so the runoff numbers cannot "
        "be compared fairly: the design tested with more rain will look worse even "
        "if it is actually better. To tell which design is better, Morgan needs to "
        "run both designs with the same rainfall."
    ),
    "rubric": "engineering",
}

ENG_PERSONA = (
    "You are a helpful teacher's assistant who helps teachers score middle school "
    "students' short answers to formative assessment questions about engineering "
    "design comparisons. Each response has an Answer part and an Explanation part. "
    "Score the response as a whole against the rubric levels and the guidelines, "
    "cite the student's own words as evidence, and report the single awarded score "
    "in the requested JSON format and nothing else."
)


def eng_exemplars() -> list[dict]:
    exemplars = []

    parts = {
        "Answer": "No",
        "Explanation": "Morgan has different inches of rainfall, which means that it is not equal or fair.",
    }
    exemplars.append({
        "id": "eng-ex1",
        "kind": "ground_truth",
        "response": {"id": "eng-fs-01", "assessment_id": "engineering", "parts": parts},
        "labels": {"score": 4},
        "cot": {
            "score": chain(
                "it is not equal or fair",
                "The student indicates he or she understands the two designs cannot be compared by providing an Answer of 'No'. Additionally, the student says 'Morgan has different inches of rainfall', which demonstrates the student understands Morgan used different rainfall values to test each design. The student also mentions that 'it is not equal or fair', which indicates the student understands that the tests are not fair. The student's response therefore meets the rubric criteria for a maximum score of 4 points. Based on the rubric, the student earned a score of 4.",
                parts,
            )
        },
    })

    parts = {
        "Answer": "No",
        "Explanation": "Morgan used different amounts of rainfall for each test.",
    }
    exemplars.append({
        "id": "eng-ex2",
        "kind": "ground_truth",
        "response": {"id": "eng-fs-02", "assessment_id": "engineering", "parts": parts},
        "labels": {"score": 3},
        "cot": {
            "score": chain(
                "Morgan used different amounts of rainfall for each test",
                "The student answers 'No' and says 'Morgan used different amounts of rainfall for each test', which identifies the differing rainfall values as the reason the designs cannot be compared. The student does not go on to say that this makes the runoff comparison unfair or uneven, so the response meets the 3-point level but not the 4-point level. Based on the rubric, the student earned a score of 3.",
                parts,
            )
        },
    })

    parts = {
        "Answer": "No",
        "Explanation": (
            "One design costs too much money and the other one has too much "
            "runoff, so both of them break the requirements. She did not add the "
            "same runoff to both designs."
        ),
    }
    exemplars.append({
        "id": "eng-ex3",
        "kind": "sticking_point",
        "response": {"id": "eng-fs-03", "assessment_id": "engineering", "parts": parts},
        "labels": {"score": 2},
        "cot": {
            "score": chain(
                "both of them break the requirements",
                "The student answers 'No' and says 'One design costs too much money and the other one has too much runoff', concluding that 'both of them break the requirements'. This demonstrates an understanding of the design constraints and that both tests violate them, which meets the 2-point level. The remark that Morgan 'did not add the same runoff to both designs' does not concern fair testing: runoff is an output of the test, not an input, so it is not something Morgan chooses to add. The student never mentions the differing rainfall inputs, so the 3- and 4-point levels are not met. Based on the rubric, the student earned a score of 2.",
                parts,
            )
        },
    })

    parts = {
        "Answer": "No",
        "Explanation": "Because there was too much rain.",
    }
    exemplars.append({
        "id": "eng-ex4",
        "kind": "sticking_point",
        "response": {"id": "eng-fs-04", "assessment_id": "engineering", "parts": parts},
        "labels": {"score": 1},
        "cot": {
            "score": chain(
                "Because there was too much rain",
                "The student answers 'No', identifying that the designs cannot be compared. The only reasoning offered is 'Because there was too much rain', but the amount of rain is not the issue: the tests are invalid because the two designs received different rainfall values, not because the rainfall was large. An invalid reason counts as no reasoning, so the response meets the 1-point level only. Based on the rubric, the student earned a score of 1.",
                parts,
            )
        },
    })

    parts = {
        "Answer": "Yes",
        "Explanation": "Morgan's second design is better because it's cheaper and has less runoff.",
    }
    exemplars.append({
        "id": "eng-ex5",
        "kind": "ground_truth",
        "response": {"id": "eng-fs-05", "assessment_id": "engineering", "parts": parts},
        "labels": {"score": 0},
        "cot": {
            "score": chain(
                "Morgan's second design is better because it's cheaper and has less runoff",
                "The student answers 'Yes' and says 'Morgan's second design is better because it's cheaper and has less runoff'. While this shows the student is attending to the design constraints of cost and runoff, answering yes means the student believes the two tests can be compared fairly, which is the 0-point level of the rubric. (Design 2's runoff of 2.9 inches is also larger, not smaller, than Design 1's 1.4 inches, but the score is determined by the Answer of 'Yes'.) Based on the rubric, the student earned a score of 0.",
                parts,
            )
        },
    })

    parts = {
        "Answer": "No",
        "Explanation": (
            "You cannot determine which is better because you could have a "
            "different need and be okay with the deficit in absorption and cost "
            "when the accessible squares are higher like if you had more children "
            "who would need accessible squares."
        ),
    }
    exemplars.append({
        "id": "eng-ex6",
        "kind": "active_learning",
        "response": {"id": "eng-fs-06", "assessment_id": "engineering", "parts": parts},
        "labels": {"score": 2},
        "cot": {
            "score": chain(
                "You cannot determine which is better because you could have a different need",
                "The student provides an Answer of 'No', which demonstrates he or she understands the two designs cannot be compared. The student elaborates by saying 'You cannot determine which is better because you could have a different need', which indicates a general understanding of the trade-offs between the engineering constraints. Additionally, the student provides specific references to the constraints by mentioning 'the deficit in absorption and cost when the accessible squares are higher': accessible squares (accessibility), deficit in absorption (runoff), and cost (cost). While the student did not mention the different rainfall values and is therefore ineligible to receive 3 or 4 points, both the general and the focused understanding of the engineering constraints qualify him or her for 2 points pursuant to the rubric and the guidelines. Based on the rubric, the student earned a score of 2.",
                parts,
            )
        },
    })
    return exemplars


# ===========================================================================
# sample response sets (seeded synthetic)
# ===========================================================================


def sample_rules_responses(n=40, seed=714) -> list[dict]:
    rng = random.Random(seed)
    conditions = {
        "R1": ("If rainfall is less than the absorption limit", "less"),
        "R4": ("If rainfall is equal to the absorption limit", "equal"),
        "R7": ("If rainfall is greater than the absorption limit", "greater"),
    }
    rows = []
    for i in range(1, n + 1):
        labels = {}
        sentences = []
        for cond_id, (cond_text, kind) in conditions.items():
            has_cond = rng.random() < 0.8
            abs_id = {"R1": "R2", "R4": "R5", "R7": "R8"}[cond_id]
            run_id = {"R1": "R3", "R4": "R6", "R7": "R9"}[cond_id]
            labels[cond_id] = 1 if has_cond else 0
            if not has_cond:
                labels[abs_id] = 0
                labels[run_id] = 0
                sentences.append("The ground soaks up what it can.")
                continue
            sets_abs = rng.random() < 0.65
            sets_run = rng.random() < 0.7
            labels[abs_id] = 1 if sets_abs else 0
            labels[run_id] = 1 if sets_run else 0
            abs_text = (
                "set absorption to the absorption limit"
                if kind == "greater"
                else "set absorption to rainfall"
            ) if sets_abs else "the ground absorbs water"
            run_text = (
                "set runoff to rainfall minus the absorption limit"
                if kind == "greater"
                else rng.choice(["set runoff to 0", "runoff is none"])
            ) if sets_run else "some water may remain"
            sentences.append(f"{cond_text}, then {abs_text}, and {run_text}.")
        rows.append(
            {
                "id": f"rules-s{i:03d}",
                "assessment_id": "rules",
                "parts": {"Answer": " ".join(sentences)},
                "human_scores": {k: labels[k] for k in sorted(labels)},
            }
        )
    return rows


def sample_debug_responses(n=40, seed=715) -> list[dict]:
    rng = random.Random(seed)
    found = {
        "D1": "The set absorption limit block on line 6 belongs before the first if statement on line 3.",
        "D2": "On line 7 rainfall should be compared to the absorption limit, not absorption.",
        "D3": "On line 8 absorption should be set to rainfall.",
        "D4": "The greater than if statement on line 10 should not be nested inside the less than one.",
        "D5": "On line 11 absorption and absorption limit are swapped.",
    }
    rows = []
    for i in range(1, n + 1):
        labels = {}
        sentences = []
        for cid, sentence in found.items():
            hit = rng.random() < 0.6
            labels[cid] = 1 if hit else 0
            if hit:
                sentences.append(sentence)
        if not sentences:
            sentences.append("I could not find the errors.")
        rows.append(
            {
                "id": f"debug-s{i:03d}",
                "assessment_id": "debugging",
                "parts": {"Answer": " ".join(sentences)},
                "human_scores": labels,
            }
        )
    return rows


def sample_eng_responses(n=40, seed=716) -> list[dict]:
    rng = random.Random(seed)
    texts = {
        0: ("Yes", "The second one wins because it costs less."),
        1: ("No", "I just don't think she can tell."),
        2: ("No", "Both designs break the cost and runoff requirements, so neither test counts."),
        3: ("No", "She tested one design with 2 inches of rain and the other with 4 inches."),
        4: ("No", "The rainfall was different for the two tests, so comparing the runoff is not fair."),
    }
    rows = []
    for i in range(1, n + 1):
        score = rng.choices([0, 1, 2, 3, 4], weights=[10, 2, 2, 3, 3])[0]
        answer, explanation = texts[score]
        rows.append(
            {
                "id": f"eng-s{i:03d}",
                "assessment_id": "engineering",
                "parts": {"Answer": answer, "Explanation": explanation},
                "human_scores": {"score": score},
            }
        )
    return rows


# ===========================================================================
# configs
# ===========================================================================


def make_configs() -> dict[str, dict]:
    cot_template = (
        "The student says '{citation}'. The rubric states '{clause}'. Based on the "
        "rubric, the student earned a score of {score}."
    )
    configs = {}
    configs["rules-0-baseline"] = {
        "assessment": "rules",
        "rubric": "rules",
        "block_order": ["persona", "context_manager", "output_template"],
        "exemplars": [],
        "cot_template": cot_template,
        "output_schema": OUTPUT_SCHEMA_BINARY,
        "token_budget": 8192,
        "persona_text": (
            "You score middle school students' short answers. Read the question, "
            "the correct response, and the rubric, then report scores in the "
            "requested JSON format and nothing else."
        ),
        "context_extras": [],
        "guidelines": None,
    }
    configs["rules-1-final"] = {
        "assessment": "rules",
        "rubric": "rules",
        "block_order": ["persona", "context_manager", "guidelines", "output_template", "few_shot"],
        "exemplars": ["rules-ex1", "rules-ex2", "rules-ex3", "rules-ex4", "rules-ex5"],
        "cot_template": cot_template,
        "output_schema": OUTPUT_SCHEMA_BINARY,
        "token_budget": 8192,
        "persona_text": RULES_PERSONA,
        "context_extras": [],
        "guidelines": RULES_RUBRIC["guidelines"],
    }
    configs["debugging-0-baseline"] = {
        "assessment": "debugging",
        "rubric": "debugging",
        "block_order": ["persona", "context_manager", "meta_language", "output_template"],
        "exemplars": [],
        "cot_template": cot_template,
        "output_schema": OUTPUT_SCHEMA_BINARY,
        "token_budget": 8192,
        "persona_text": configs["rules-0-baseline"]["persona_text"],
        "context_extras": [],
        "guidelines": None,
    }
    configs["debugging-1-final"] = {
        "assessment": "debugging",
        "rubric": "debugging",
        "block_order": ["persona", "context_manager", "meta_language", "guidelines", "output_template", "few_shot"],
        "exemplars": ["debug-ex1", "debug-ex2", "debug-ex3", "debug-ex4", "debug-ex5", "debug-ex6"],
        "cot_template": cot_template,
        "output_schema": OUTPUT_SCHEMA_BINARY,
        "token_budget": 8192,
        "persona_text": DEBUG_PERSONA,
        "context_extras": [
            (
                "Walkthrough of the classmate's model, line by line. Line 1 starts "
                "the simulation. Line 2 sets the rainfall for the storm to 1 inch. "
                "Line 3 opens the first if statement, which compares rainfall to "
                "the absorption limit with an equals test; at this point in the "
                "script the absorption limit has not been set yet, which is why "
                "its placement matters. Lines 4 and 5 are the body of that equal-to "
                "rule: they set absorption to rainfall and runoff to 0, which is "
                "correct for the first rule. Line 6 sets the absorption limit to "
                "the absorption limit of the selected material; this is the block "
                "whose position is wrong. Line 7 opens the second if statement, the "
                "less-than rule, but compares rainfall to absorption instead of to "
                "the absorption limit. Line 8, inside that rule, sets absorption to "
                "the absorption limit when it should set absorption to rainfall. "
                "Line 9 sets runoff to 0, which is correct for the second rule. "
                "Line 10 opens the third if statement, the greater-than rule, but "
                "it sits indented inside the second rule's body instead of being "
                "connected after it. Line 11, inside the third rule, sets the "
                "absorption limit to absorption, which is the reverse of the "
                "correct assignment. Line 12 sets runoff to rainfall minus the "
                "absorption limit, which is correct for the third rule. After the "
                "five fixes, the model would read: set the rainfall, set the "
                "absorption limit of the selected material, then three sibling if "
                "statements in a row, each comparing rainfall to the absorption "
                "limit and setting absorption and runoff as the rules assessment "
                "describes. Keep this corrected shape in mind when deciding "
                "whether a student's proposed fix actually repairs the error "
                "they point at: a response can name the right block yet describe "
                "a change that would leave the model wrong, and such a response "
                "does not earn the point."
            ),
            (
                "How students refer to the code. Students saw this model as "
                "colored blocks, so their responses may name a line number from "
                "the comments, a block color from the legend, a rule number from "
                "the earlier rules assessment, or a position such as 'the if "
                "statement inside the other one'. Responses were typed quickly "
                "and may contain spelling and grammar mistakes; read them "
                "charitably for meaning, but apply the guidelines strictly when "
                "deciding whether a block reference is unambiguous."
            ),
        ],
        "guidelines": DEBUG_RUBRIC["guidelines"],
    }
    configs["engineering-0-baseline"] = {
        "assessment": "engineering",
        "rubric": "engineering",
        "block_order": ["persona", "context_manager", "output_template"],
        "exemplars": [],
        "cot_template": cot_template,
        "output_schema": OUTPUT_SCHEMA_ORDINAL,
        "token_budget": 8192,
        "persona_text": configs["rules-0-baseline"]["persona_text"],
        "context_extras": [],
        "guidelines": None,
    }
    configs["engineering-1-final"] = {
        "assessment": "engineering",
        "rubric": "engineering",
        "block_order": ["persona", "context_manager", "guidelines", "output_template", "few_shot"],
        "exemplars": ["eng-ex1", "eng-ex2", "eng-ex3", "eng-ex4", "eng-ex5", "eng-ex6"],
        "cot_template": cot_template,
        "output_schema": OUTPUT_SCHEMA_ORDINAL,
        "token_budget": 8192,
        "persona_text": ENG_PERSONA,
        "context_extras": [],
        "guidelines": ENG_RUBRIC["guidelines"],
    }
    return configs


def main() -> None:
    write_yaml(FIXTURES / "rubrics" / "rules.yaml", RULES_RUBRIC)
    write_yaml(FIXTURES / "rubrics" / "debugging.yaml", DEBUG_RUBRIC)
    write_yaml(FIXTURES / "rubrics" / "engineering.yaml", ENG_RUBRIC)

    write_yaml(FIXTURES / "assessments" / "rules.yaml", RULES_ASSESSMENT)
    write_yaml(FIXTURES / "assessments" / "debugging.yaml", DEBUG_ASSESSMENT)
    write_yaml(FIXTURES / "assessments" / "engineering.yaml", ENG_ASSESSMENT)

    stores = {
        "rules": (rules_exemplars(), [["rules-ex1", "rules-ex2", "rules-ex3", "rules-ex4"],
                                      ["rules-ex1", "rules-ex2", "rules-ex3", "rules-ex4", "rules-ex5"]]),
        "debugging": (debug_exemplars(), [["debug-ex1", "debug-ex2", "debug-ex3",
                                           "debug-ex4", "debug-ex5", "debug-ex6"]]),
        "engineering": (eng_exemplars(), [["eng-ex1", "eng-ex2", "eng-ex3", "eng-ex4", "eng-ex5"],
                                          ["eng-ex1", "eng-ex2", "eng-ex3", "eng-ex4", "eng-ex5", "eng-ex6"]]),
    }
    for aid, (exemplars, versions) in stores.items():
        for ex in exemplars:
            write_json(FIXTURES / "exemplars" / aid / f"{ex['id']}.json", ex)
        write_json(FIXTURES / "exemplars" / aid / "manifest.json", {"versions": versions})

    for name, doc in make_configs().items():
        path = FIXTURES / "configs" / f"{name}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")

    write_jsonl(FIXTURES / "responses" / "rules.jsonl", sample_rules_responses())
    write_jsonl(FIXTURES / "responses" / "debugging.jsonl", sample_debug_responses())
    write_jsonl(FIXTURES / "responses" / "engineering.jsonl", sample_eng_responses())

    write_yaml(
        FIXTURES / "providers.yaml",
        {
            "echo": {"type": "echo"},
            "faulty_demo": {"type": "faulty", "error_rate": 0.15, "seed": 11},
        },
    )
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
