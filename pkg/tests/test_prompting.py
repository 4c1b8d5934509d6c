from __future__ import annotations

from datetime import date, datetime, timezone

import pytest
from hypothesis import given, strategies as st

from memrag import templates
from memrag.errors import ValidationError
from memrag.prompting import AssembledPrompt, PromptConfig, PromptMode, build
from memrag.store import MemoryRecord, RetrievalResult

T0 = datetime(2024, 12, 23, 8, 0, tzinfo=timezone.utc)


def result(score, text="a saved note", record_id="r1", timestamp=T0):
    record = MemoryRecord(
        record_id=record_id,
        user_id="u1",
        text=text,
        timestamp=timestamp,
        source_id="s1",
        chunk_index=0,
        vector=None,
    )
    return RetrievalResult(record=record, score=score)


class TestModeSelection:
    def test_no_results_is_generic_with_honesty_clause(self):
        prompt = build("Who is the president of Nigeria?", [])
        assert prompt.mode is PromptMode.GENERIC
        rendered = prompt.render()
        assert templates.HONESTY_CLAUSE in rendered
        assert templates.CONTEXT_HEADER not in rendered
        assert prompt.context_items == ()

    def test_strong_scores_are_contextual_in_order(self):
        results = [
            result(0.9, "strongest", "r1"),
            result(0.7, "middle", "r2"),
            result(0.5, "weakest", "r3"),
        ]
        prompt = build("query", results)
        assert prompt.mode is PromptMode.CONTEXTUAL
        assert [item.score for item in prompt.context_items] == [0.9, 0.7, 0.5]
        assert [item.record_id for item in prompt.context_items] == ["r1", "r2", "r3"]

    def test_all_below_threshold_falls_back_to_generic(self):
        # tau defaults to 0.35; 0.2 and 0.1 both miss it.
        prompt = build("query", [result(0.2), result(0.1, record_id="r2")])
        assert prompt.mode is PromptMode.GENERIC
        assert prompt.context_items == ()

    def test_exact_threshold_value_is_kept(self):
        prompt = build("query", [result(0.35)])
        assert prompt.mode is PromptMode.CONTEXTUAL

    def test_unsorted_inputs_are_sorted_descending(self):
        prompt = build("query", [result(0.5, record_id="low"), result(0.9, record_id="high")])
        assert [item.record_id for item in prompt.context_items] == ["high", "low"]


class TestRendering:
    def test_context_lines_carry_timestamp_and_text(self):
        prompt = build("query", [result(0.8, "remember the doctor", "r9", T0)])
        rendered = prompt.render()
        assert "1. [2024-12-23T08:00:00Z] remember the doctor" in rendered

    def test_below_threshold_text_never_renders(self):
        prompt = build(
            "query", [result(0.9, "kept context"), result(0.1, "dropped context", "r2")]
        )
        rendered = prompt.render()
        assert "kept context" in rendered
        assert "dropped context" not in rendered

    def test_honesty_clause_appears_exactly_once(self):
        for results in ([], [result(0.9)], [result(0.9), result(0.4, record_id="r2")]):
            rendered = build("any question", results).render()
            assert rendered.count(templates.HONESTY_CLAUSE) == 1

    def test_transcript_window_keeps_last_turns(self):
        transcript = [("user", f"turn {i}") for i in range(10)]
        prompt = build("query", [], transcript=transcript)
        assert len(prompt.transcript_window) == 4
        assert prompt.transcript_window[-1] == ("user", "turn 9")
        rendered = prompt.render()
        assert "turn 9" in rendered and "turn 5" not in rendered

    def test_window_zero_disables_transcript(self):
        config = PromptConfig(transcript_window_size=0)
        prompt = build("query", [], transcript=[("user", "hello")], config=config)
        assert prompt.transcript_window == ()
        assert templates.TRANSCRIPT_HEADER not in prompt.render()

    def test_rendering_is_deterministic(self):
        results = [result(0.8, "same context")]
        transcript = [("user", "hi"), ("assistant", "hello")]
        first = build("query", results, transcript=transcript).render()
        second = build("query", results, transcript=transcript).render()
        assert first == second

    def test_query_appears_after_system_content(self):
        prompt = build("what is next?", [result(0.9, "ctx")])
        rendered = prompt.render()
        assert rendered.endswith(f"{templates.QUERY_PREFIX}what is next?")
        assert rendered.startswith(prompt.system_text)

    def test_server_date_line_is_opt_in(self):
        without = build("query", [])
        assert "Today's date is" not in without.render()
        with_date = build("query", [], current_date=date(2024, 12, 23))
        assert "Today's date is 2024-12-23." in with_date.render()

    def test_distinct_inputs_render_distinct_prompts(self):
        base = build("query one", [result(0.9, "ctx")])
        other_query = build("query two", [result(0.9, "ctx")])
        other_ctx = build("query one", [result(0.9, "different ctx")])
        assert len({base.render(), other_query.render(), other_ctx.render()}) == 3


class TestValidation:
    @pytest.mark.parametrize("bad", ["", "   "])
    def test_empty_query_rejected(self, bad):
        with pytest.raises(ValidationError):
            build(bad, [])

    @pytest.mark.parametrize("tau", [-0.1, 1.0, 2.0])
    def test_bad_threshold_rejected(self, tau):
        with pytest.raises(ValidationError):
            PromptConfig(relevance_threshold=tau)

    def test_negative_window_rejected(self):
        with pytest.raises(ValidationError):
            PromptConfig(transcript_window_size=-1)

    def test_template_must_contain_honesty_clause(self):
        with pytest.raises(ValidationError):
            PromptConfig(generic_template="be nice")


@given(
    scores=st.lists(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False), max_size=8),
    tau=st.floats(min_value=0.0, max_value=0.99, allow_nan=False),
)
def test_mode_is_contextual_iff_any_score_clears_threshold(scores, tau):
    config = PromptConfig(relevance_threshold=tau)
    results = [result(score, record_id=f"r{i}") for i, score in enumerate(scores)]
    prompt = build("question", results, config=config)
    expected = any(score >= tau for score in scores)
    assert (prompt.mode is PromptMode.CONTEXTUAL) == expected
    assert len(prompt.context_items) == sum(score >= tau for score in scores)


@given(st.lists(st.text(alphabet="abc xyz", min_size=1, max_size=20), max_size=5))
def test_honesty_clause_count_stays_one_for_benign_contexts(texts):
    results = [result(0.9, text or "x", record_id=f"r{i}") for i, text in enumerate(texts)]
    rendered = build("question", results).render()
    assert rendered.count(templates.HONESTY_CLAUSE) == 1
