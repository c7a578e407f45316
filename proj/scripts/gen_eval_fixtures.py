#!/usr/bin/env python3
"""Regenerates the evaluation fixtures: a 20-item multiple-choice set, a
14-item topic-classification set, and their task configs."""

import json
import sys

SUBJECTS = ["бала", "тас", "дала", "қол", "тіл", "сөз", "ел", "жер", "су", "от"]
ADJ = ["үлкен", "кіші", "жақсы", "жаңа", "ескі"]

LABELS = ["саясат", "спорт", "мәдениет", "экономика", "ғылым", "денсаулық", "технология"]


def main(outdir):
    with open(outdir + "/eval_mc.jsonl", "w", encoding="utf-8") as f:
        for i in range(20):
            subj = SUBJECTS[i % len(SUBJECTS)]
            adj = ADJ[i % len(ADJ)]
            choices = [SUBJECTS[(i + k) % len(SUBJECTS)] for k in range(4)]
            item = {
                "id": "mc-%02d" % i,
                "context": "%s %s туралы мәтін." % (adj, subj),
                "question": "Мәтінде қандай зат туралы айтылады?",
                "choices": choices,
                "gold": 0,
            }
            f.write(json.dumps(item, ensure_ascii=False) + "\n")

    with open(outdir + "/eval_cls.jsonl", "w", encoding="utf-8") as f:
        for i in range(14):
            label = LABELS[i % len(LABELS)]
            item = {
                "id": "cls-%02d" % i,
                "text": "Бұл %s туралы қысқа мақала нөмірі %d." % (label, i),
                "label": label,
            }
            f.write(json.dumps(item, ensure_ascii=False) + "\n")

    with open(outdir + "/task_mc.json", "w", encoding="utf-8") as f:
        json.dump({
            "task": "mc-qa",
            "type": "multiple_choice",
            "template": "«{context}»\n{question}\n",
            "candidate_prefix": "",
        }, f, ensure_ascii=False, indent=2)
        f.write("\n")

    with open(outdir + "/task_cls.json", "w", encoding="utf-8") as f:
        json.dump({
            "task": "topic-cls",
            "type": "classification",
            "template": "{text}\n",
            "candidate_prefix": "",
            "labels": LABELS,
        }, f, ensure_ascii=False, indent=2)
        f.write("\n")
    print("wrote eval fixtures")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures")
