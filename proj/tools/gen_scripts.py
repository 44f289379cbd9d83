#!/usr/bin/env python3
"""Generates the scripted-backend fixtures in data/scripts/.

    python3 tools/gen_scripts.py
"""

import json
from pathlib import Path

N = 30
DATA = Path(__file__).resolve().parent.parent / "data"

OCCUPATIONS = [
    "primary school teacher", "nurse", "software developer", "bus driver", "accountant",
    "chef", "pharmacist", "electrician", "librarian", "retired postman",
    "graphic designer", "shop owner", "dentist", "university student", "firefighter",
    "civil engineer", "barista", "real estate agent", "retired gardener", "journalist",
    "physiotherapist", "police officer", "architect", "hairdresser", "retired factory worker",
    "veterinarian", "delivery courier", "music teacher", "lawyer", "social worker",
]

PERSONALITIES = [
    "Warm and talkative, enjoys meeting neighbors.",
    "Quiet and methodical, prefers routine.",
    "Energetic and curious, always trying new things.",
    "Practical and thrifty, cares about convenience.",
    "Calm and reflective, values green and quiet places.",
]

LIFESTYLES = [
    {"hobbies": ["jogging", "cooking"], "lifestyle": "Early riser who exercises before work.",
     "pursuits": "Stay healthy and keep a balanced life."},
    {"hobbies": ["reading", "chess"], "lifestyle": "Spends evenings at home or in quiet places.",
     "pursuits": "Keep learning and help the community."},
    {"hobbies": ["gardening", "bird watching"], "lifestyle": "Spends a lot of time outdoors near home.",
     "pursuits": "A greener neighborhood with places to grow plants."},
    {"hobbies": ["basketball", "video games"], "lifestyle": "Busy weekdays, sports in the evening.",
     "pursuits": "Better recreation facilities nearby."},
    {"hobbies": ["painting", "coffee tasting"], "lifestyle": "Works flexible hours, likes cafes.",
     "pursuits": "A lively neighborhood with shops and culture."},
]

SERVICE_AREAS = ["a_6", "a_7", "a_8", "a_9", "a_10", "a_11", "a_12"]

REFLECTIONS = [
    {"thoughts": ["I spend most of my day close to home.",
                  "Having services within walking distance matters to me."]},
    {"thoughts": ["My neighbors care about green space.",
                  "Short trips make my day easier."]},
]

DISCUSS = [
    "I would like more daily services within walking distance of my home.",
    "A park or open space nearby would make the neighborhood healthier.",
    "Schools and clinics should be reachable without a long trip.",
    "Please keep some recreation space for young people.",
]

SUMMARIES = [
    "Residents ask for services within walking distance and more green space.",
    "Residents welcome the changes but still want more greenery and recreation.",
    "Residents are broadly satisfied; a few ask for more open space.",
]


def decide(intent, target, dwell, delay=0, social=None):
    return {"intent": intent, "target": target, "dwell": dwell, "delay": delay, "social": social}


def routine(i):
    """Cyclic daily routine for resident i (1-based)."""
    a = SERVICE_AREAS[i % len(SERVICE_AREAS)]
    b = SERVICE_AREAS[(i * 3 + 1) % len(SERVICE_AREAS)]
    return [
        decide("rest at home", "stay", 45 + 5 * (i % 4)),
        decide("run errands", a, 60 + 10 * (i % 3)),
        decide("go back home", "home", 90),
        decide("meet friends", b, 75, delay=5),
        decide("head home", "home", 120),
    ]


def marker(i):
    return f"Resident [R_{i}]"


def profile_entries(occupations):
    return [
        {"tag": "profile.personality", "responses": PERSONALITIES, "cycle": True},
        {"tag": "profile.occupation", "responses": occupations},
        {"tag": "profile.lifestyle", "responses": LIFESTYLES, "cycle": True},
    ]


def living_entries(extra_first=()):
    entries = list(extra_first)
    for i in range(1, N + 1):
        entries.append({"tag": "live.decide", "match": marker(i), "responses": routine(i), "cycle": True})
    entries.append({"tag": "live.reflect", "responses": REFLECTIONS, "cycle": True})
    return entries


def planning_entries(drafts, finals, discuss_first=()):
    return [
        {"tag": "plan.draft", "responses": drafts},
        *discuss_first,
        {"tag": "plan.discuss", "responses": DISCUSS, "cycle": True},
        {"tag": "plan.summarize", "responses": SUMMARIES},
        {"tag": "plan.final", "responses": finals},
    ]


QUESTIONS = ["q_commute", "q_amenities", "q_greenery", "q_social", "q_overall"]


def answers(scores, rationale):
    return {"answers": [{"id": q, "score": s, "rationale": rationale} for q, s in zip(QUESTIONS, scores)]}


def e2e_script():
    drafts = [
        {"changes": [{"area": "a_6", "land_use": "Commercial"}, {"area": "a_7", "land_use": "School"},
                     {"area": "a_8", "land_use": "Park"}, {"area": "a_9", "land_use": "Clinic"},
                     {"area": "a_10", "land_use": "Recreation"}, {"area": "a_11", "land_use": "Park"},
                     {"area": "a_12", "land_use": "Office"}]},
        {"changes": [{"area": "a_12", "land_use": "OpenSpace"}]},
        {"changes": [{"area": "a_10", "land_use": "Hospital"}, {"area": "a_9", "land_use": "Recreation"}]},
    ]
    finals = [
        {"changes": []},
        {"changes": [{"area": "a_6", "land_use": "Commercial"}]},
        {"changes": [{"area": "a_11", "land_use": "OpenSpace"}]},
    ]
    # Experience per iteration: 65.03, 66.60, 69.03 (mean over 30 x 5 answers).
    interview = []
    for i in range(1, N + 1):
        if i == N:
            rounds = [[65, 65, 65, 65, 69.5], [84] * 5, [69, 69, 69, 69, 73.5]]
        else:
            rounds = [[65] * 5, [66] * 5, [69] * 5]
        interview.append({"tag": "judge.interview", "match": marker(i),
                          "responses": [answers(s, "Reasonable, though services could be closer.") for s in rounds]})
    suggestions = [
        {"suggestions": [{"target": "a_12", "proposed": "OpenSpace", "rationale": "more greenery near homes"},
                         {"target": "health", "proposed": "Hospital", "rationale": "care is far away"}]},
        {"suggestions": [{"target": "recreation", "proposed": "Recreation", "rationale": "young residents"}]},
        {"suggestions": [{"target": "a_7", "proposed": "School", "rationale": "keep the school"}]},
    ]
    posts = [{"tag": "live.decide", "match": marker(i),
              "responses": [decide("share news", "stay", 30,
                                   social={"type": "post", "text": f"Good morning from resident R_{i}!"})]}
             for i in (2, 5, 11)]
    comment = [{"tag": "live.decide", "match": [marker(7), "[p_1]"],
                "responses": [decide("reply to a neighbor", "stay", 30,
                                     social={"type": "comment", "post_id": "p_1", "text": "Good morning!"})]}]
    return {"entries": profile_entries(OCCUPATIONS) + living_entries(posts + comment)
            + planning_entries(drafts, finals) + interview
            + [{"tag": "judge.suggest", "responses": suggestions}]}


def gardener_script():
    wish = "I wish we had an open space nearby where I could grow flowers and vegetables."
    first = [
        {"tag": "live.decide", "match": marker(19),
         "responses": [decide("share a wish with the neighbors", "stay", 60,
                              social={"type": "post", "text": wish})]},
        {"tag": "live.decide", "match": [marker(16), "[p_1]"],
         "responses": [decide("support the open space idea", "stay", 45,
                              social={"type": "comment", "post_id": "p_1",
                                      "text": "I support this, an open space would be great for everyone."})]},
    ]
    drafts = [
        # Iteration 2: the draft prompt carries the a_12 suggestion.
        {"changes": [{"area": "a_12", "land_use": "OpenSpace"}]},
    ]
    first_draft = {"changes": [{"area": "a_6", "land_use": "Commercial"}, {"area": "a_7", "land_use": "School"},
                               {"area": "a_8", "land_use": "Park"}, {"area": "a_9", "land_use": "Clinic"},
                               {"area": "a_10", "land_use": "Recreation"}, {"area": "a_11", "land_use": "Office"},
                               {"area": "a_12", "land_use": "Commercial"}]}
    planning = [
        {"tag": "plan.draft", "match": "\"target\":\"a_12\"", "responses": drafts},
        {"tag": "plan.draft", "responses": [first_draft]},
        {"tag": "plan.discuss", "match": marker(19), "cycle": True,
         "responses": ["I insist that a_12 should become an open space where residents can garden."]},
        {"tag": "plan.discuss", "responses": DISCUSS, "cycle": True},
        {"tag": "plan.summarize", "responses": SUMMARIES},
        {"tag": "plan.final", "responses": [{"changes": []}, {"changes": []}]},
    ]
    interview = [
        {"tag": "judge.interview", "match": marker(19), "cycle": True,
         "responses": [answers([40, 45, 20, 50, 35], "There is no open space near my home to grow plants.")]},
        {"tag": "judge.interview", "cycle": True,
         "responses": [answers([70, 70, 60, 70, 68], "The neighborhood works well for my daily needs.")]},
    ]
    suggest = [
        {"tag": "judge.suggest", "match": "open space",
         "responses": [{"suggestions": [{"target": "a_12", "proposed": "OpenSpace",
                                         "rationale": "Residents asked for an open space for gardening."}]}]},
        {"tag": "judge.suggest", "cycle": True, "responses": [{"suggestions": []}]},
    ]
    profile = [
        {"tag": "profile.personality", "match": marker(19),
         "responses": ["A gentle elderly person, patient and attentive to plants and seasons."]},
        {"tag": "profile.lifestyle", "match": marker(19),
         "responses": [{"hobbies": ["gardening", "growing vegetables"],
                        "lifestyle": "Retired; spends mornings tending plants and walks around the block.",
                        "pursuits": "A shared open space where neighbors can garden together."}]},
    ]
    return {"entries": profile + profile_entries(OCCUPATIONS) + living_entries(first) + planning + interview
            + suggest}


def main():
    out = DATA / "scripts"
    out.mkdir(parents=True, exist_ok=True)
    for name, script in (("e2e.json", e2e_script()), ("gardener.json", gardener_script())):
        (out / name).write_text(json.dumps(script, indent=2) + "\n")


if __name__ == "__main__":
    main()
