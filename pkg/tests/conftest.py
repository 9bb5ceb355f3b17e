import os

import pytest
from hypothesis import settings

from pie_ie.document import ENTITY_RELATION_SCHEMA, BinaryRelation, Document, LabeledSpan

settings.register_profile("default", max_examples=100, deadline=None)
settings.register_profile("ci", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def alice_doc():
    """'Alice works for Acme' with one gold relation."""
    doc = Document("d1", "Alice works for Acme", ENTITY_RELATION_SCHEMA)
    alice = LabeledSpan(0, 5, "PER")
    acme = LabeledSpan(16, 20, "ORG")
    doc.add("entities", alice)
    doc.add("entities", acme)
    doc.add("relations", BinaryRelation(alice, acme, "works_for"))
    return doc.seal()


def pytest_terminal_summary(terminalreporter):
    from tests_acceptance_results import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
