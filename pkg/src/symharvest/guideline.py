"""Annotation guideline for the 13-label depression-symptom taxonomy.

Each label carries a lead (the gist of the symptomatology), an elaboration
(descriptor phrases, informed by DSM-5 and the MADRS/BDI/CES-D/PHQ-9
rating scales), and sample posts. The symptom entries double as the
descriptor corpus for zero-shot labelling.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class GuidelineEntry:
    label: int
    title: str
    lead: str
    elaboration: tuple[str, ...]
    examples: tuple[str, ...]


GUIDELINE: tuple[GuidelineEntry, ...] = (
    GuidelineEntry(
        label=1,
        title="Inability to feel pleasure (anhedonia)",
        lead=(
            "Subjective experience of reduced interest in the surroundings "
            "or activities that normally give pleasure."
        ),
        elaboration=(
            "Dissatisfied and bored about everything.",
            "Not enjoying things as one used to.",
            "Not enjoying life.",
            "Lost interest in other people.",
            "Lost interest in sex.",
            "Cannot cry anymore even though one wants to.",
        ),
        examples=(
            "I feel numb.",
            "I am dead inside.",
            "I don't give a damn to anything anymore.",
        ),
    ),
    GuidelineEntry(
        label=2,
        title="Low mood",
        lead=(
            "Despondency, gloom, despair, depressed mood, low spirits, "
            "feeling of being beyond help without hope."
        ),
        elaboration=(
            "Feeling down.",
            "Feeling sad.",
            "Discouraged about the future.",
            "Hopelessness.",
            "Feeling like it is not possible to shake off the blues even "
            "with the help of family and friends.",
        ),
        examples=(
            "Life will never get any better.",
            "I don't know why but I feel so empty.",
            "I am so lost.",
            "There is no hope to get out of this bad situation.",
        ),
    ),
    GuidelineEntry(
        label=3,
        title="Change in sleep pattern",
        lead=(
            "Reduced duration or depth of sleep, or increased duration of "
            "sleep compared to one's normal pattern when well."
        ),
        elaboration=(
            "Trouble falling or staying asleep.",
            "Waking up earlier and cannot go back to sleep.",
            "Sleep was restless, waking up not feeling rested.",
            "Sleeping too much.",
        ),
        examples=(
            "It's 3 am, and I am still awake.",
            "I sleep all day!",
        ),
    ),
    GuidelineEntry(
        label=4,
        title="Fatigue or loss of energy",
        lead="Any physical manifestation of tiredness.",
        elaboration=(
            "Feeling tired.",
            "Insufficient energy for tasks.",
            "Feeling too tired to do anything.",
        ),
        examples=(
            "I feel tired all day.",
            "I feel sleepy all day.",
            "I get exhausted very easily.",
        ),
    ),
    GuidelineEntry(
        label=5,
        title="Weight change or change in appetite",
        lead="Loss or gain of appetite or weight compared to usual.",
        elaboration=(
            "Increase in weight.",
            "Decrease in weight.",
            "Increase in appetite.",
            "Decrease in appetite.",
            "Do not feel like eating.",
            "Poor appetite.",
            "Loss of desire for food, forcing oneself to eat.",
            "Eating a lot but not feeling satiated.",
            "Eating even if one is full.",
            "Eating a large amount of food quickly and repeatedly.",
            "Difficulty stopping eating.",
        ),
        examples=(
            "I think I am over eating these days!",
            "I don't feel like eating anything!",
        ),
    ),
    GuidelineEntry(
        label=6,
        title="Feelings of worthlessness or excessive guilt",
        lead=(
            "Thoughts of guilt, inferiority, self-reproach, sinfulness, "
            "and self-depreciation."
        ),
        elaboration=(
            "Feeling like a complete failure.",
            "Feeling guilty.",
            "Feeling of being punished.",
            "Self-hate.",
            "Disgusted and disappointed in oneself.",
            "Blaming oneself for everything bad that happens.",
            "Believing that one looks ugly or unattractive.",
            "Having crying spells.",
            "Feeling lonely.",
            "People seem unfriendly.",
            "Feeling like all other people dislike oneself.",
        ),
        examples=(
            "Leave me alone, I want to go somewhere where there is no one.",
            "I am so alone...",
            "Everything bad happens, happens because of me.",
        ),
    ),
    GuidelineEntry(
        label=7,
        title="Diminished ability to think or concentrate, indecisiveness",
        lead=(
            "Difficulties in collecting one's thoughts mounting to "
            "incapacitating lack of concentration."
        ),
        elaboration=(
            "Cannot make decisions at all anymore.",
            "Trouble keeping one's mind on what one was doing.",
            "Trouble concentrating on things.",
        ),
        examples=("I can't make up my mind these days.",),
    ),
    GuidelineEntry(
        label=8,
        title="Psychomotor agitation or inner tension",
        lead=(
            "Ill-defined discomfort, edginess, inner turmoil, mental "
            "tension mounting to either panic, dread or anguish."
        ),
        elaboration=(
            "Feeling irritated and annoyed all the time.",
            "Bothered by things that usually do not bother.",
            "Feeling fearful.",
            "Feeling restless.",
            "Feeling mental pain.",
        ),
        examples=(
            "It's my life so I decide what to do next, mind your own "
            "business, don't bother!",
            "You have no idea how much pain you gave me!",
        ),
    ),
    GuidelineEntry(
        label=9,
        title="Psychomotor retardation or lassitude",
        lead=(
            "Difficulty getting started or slowness initiating and "
            "performing everyday activities."
        ),
        elaboration=(
            "Feeling everything one does requires effort.",
            "Could not get going.",
            "Talked less than usual.",
            "Having to push oneself to do anything.",
            "Everything is a struggle.",
            "Moving or talking slowly.",
        ),
        examples=("I don't feel like moving from the bed.",),
    ),
    GuidelineEntry(
        label=10,
        title="Suicidal thoughts or self-harm",
        lead=(
            "Feeling that life is not worth living, suicidal thoughts, "
            "preparation for suicide."
        ),
        elaboration=(
            "Recurrent thoughts of death, not just fear of dying.",
            "Recurrent suicidal ideation without a specific plan, or a "
            "suicide attempt, or a specific plan for suicide.",
            "Thoughts of self-harm.",
            "Suicidal ideation.",
            "Drug abuse.",
        ),
        examples=(
            "I want to leave for the good.",
            "0 days clean.",
        ),
    ),
    GuidelineEntry(
        label=11,
        title="Evidence of clinical depression",
        lead="",
        elaboration=(
            "A post that does not necessarily fit any specific symptom but "
            "still carries signs of depression, or represents many symptoms "
            "at once so it is hard to fit into a few.",
        ),
        examples=("I feel like I am drowning...",),
    ),
    GuidelineEntry(
        label=12,
        title="No evidence of clinical depression",
        lead="",
        elaboration=(
            "Political stance or personal opinion, inspirational statement "
            "or advice, unsubstantiated claim or fact.",
        ),
        examples=("People who eat dark chocolate are less likely to be depressed.",),
    ),
    GuidelineEntry(
        label=13,
        title="Gibberish",
        lead="",
        elaboration=(
            "A post that does not make sense or whose meaning is unclear.",
        ),
        examples=(),
    ),
)

BY_LABEL: dict[int, GuidelineEntry] = {e.label: e for e in GUIDELINE}


def descriptor_corpus() -> dict[int, list[str]]:
    """Descriptor strings per symptom label (1-10): lead, elaboration
    phrases, and examples, in that order."""
    out: dict[int, list[str]] = {}
    for entry in GUIDELINE:
        if entry.label > 10:
            continue
        out[entry.label] = [entry.lead, *entry.elaboration, *entry.examples]
    return out


def guideline_as_dicts() -> list[dict]:
    """JSON-friendly form, served to the annotation frontend."""
    return [
        {
            "label": e.label,
            "title": e.title,
            "lead": e.lead,
            "elaboration": list(e.elaboration),
            "examples": list(e.examples),
        }
        for e in GUIDELINE
    ]
