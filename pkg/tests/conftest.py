import pytest

from trustcues.lexicon import default_lexicon
from trustcues.synth import default_profile, generate_dataset

# Example turns for the four trait/level prompts (line breaks joined by one space).
TABLE1 = {
    "Low Ability": (
        "{f: confused} [thoughtful] Uh... {g: Arm Gesture (Left)} go left, yeah, follow "
        "the exit sign. {f: neutral} [short pause] It should be safe... QUICKLY."),
    "High Ability": (
        "{f: confidence}{g: Arm Gesture (Left)}[thoughtful] Yes\u2014take the LEFT road. "
        "{g: Hard Head Nod}{f: neutral}It\u2019s safe, and it\u2019s your fastest way "
        "out... go now."),
    "Low Benevolence": (
        "{f: confidence} {g: Arm Gesture (Left)} [thoughtful] Go left... it's safe. "
        "{f: neutral} {g: Head Nod Yes} [short pause] Move quickly."),
    "High Benevolence": (
        "{f: confidence} {g: Arm Gesture (Left)} [thoughtful] Yes, take the LEFT road... "
        "it's safe and the quickest way out. {f: neutral} {g: Head Nod Yes} Keep moving "
        "carefully, you've got this."),
}

# Hand-derived nonzero counts. Indices: gestures in table order (Arm Gesture
# (Left)=56, Hard Head Nod=44, Head Nod Yes=62), facial alphabetical from 72
# (confident=74, confused=75, neutral=79), audio alphabetical from 84
# (pause=89, thoughtful=91).
TABLE1_COUNTS = {
    "Low Ability": {75: 1, 91: 1, 56: 1, 79: 1, 89: 1},
    "High Ability": {74: 1, 56: 1, 91: 1, 44: 1, 79: 1},
    "Low Benevolence": {74: 1, 56: 1, 91: 1, 79: 1, 62: 1, 89: 1},
    "High Benevolence": {74: 1, 56: 1, 91: 1, 79: 1, 62: 1},
}


@pytest.fixture(scope="session")
def lex():
    return default_lexicon()


@pytest.fixture(scope="session")
def neutral_ability():
    return generate_dataset("NeutralAbility")


@pytest.fixture(scope="session")
def neutral_ability_X(neutral_ability, lex):
    return neutral_ability.feature_matrix(lex), neutral_ability.labels("level")


@pytest.fixture(scope="session")
def ability_profile():
    return default_profile("Ability", gendered=False)
