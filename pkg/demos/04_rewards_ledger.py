"""Exercise the carbon factors and the idempotent points ledger.

Run from the repository root:

    python demos/04_rewards_ledger.py

No model involved; this one is instant.
"""

from wastesort import (
    AppendResult,
    CarbonFactorTable,
    LedgerEvent,
    PointsLedger,
    carbon_for,
    labels,
)

from _common import OUTPUT_DIR


def event(user, n, label, etype="classify_confirmed", points=10, table=None):
    carbon = carbon_for(label, table) if etype == "classify_confirmed" else 0.0
    return LedgerEvent(
        client_event_id=f"{user}-{n}",
        user_id=user,
        type=etype,
        label=label,
        points=points,
        carbon_g=carbon,
        timestamp=f"2026-08-17T10:{n:02d}:00Z",
    )


def main():
    table = CarbonFactorTable.default()
    print(f"Carbon factor table version {table.version} (placeholder values):")
    for name, grams in table.factors_g.items():
        print(f"  {name:<10} {grams:>7.1f} g per item")

    journal = OUTPUT_DIR / "demo_ledger.ndjson"
    journal.parent.mkdir(parents=True, exist_ok=True)
    journal.unlink(missing_ok=True)
    ledger = PointsLedger(journal)

    glass = labels.label_from_name("glass")
    metal = labels.label_from_name("metal")
    batch = [
        event("ana", 1, glass, table=table),
        event("ana", 2, metal, table=table),
        event("ana", 3, glass, etype="feedback_submitted", points=5, table=table),
        event("bo", 1, metal, table=table),
    ]
    print("\nApplying four events:")
    for ev in batch:
        print(f"  {ev.user_id}/{ev.client_event_id}: {ledger.append_event(ev).value}")

    print("\nReplaying the same four (a client that never saw the ack):")
    outcomes = [ledger.append_event(ev) for ev in batch]
    print(f"  duplicates: {sum(o is AppendResult.DUPLICATE for o in outcomes)} of {len(outcomes)}")

    print("\nTotals are unchanged by the replay:")
    for user in ("ana", "bo"):
        s = ledger.summary(user)
        print(f"  {user:<4} {s.total_points:>3} pts, {s.total_carbon_g:>7.1f} g, "
              f"{s.event_count} events")

    reopened = PointsLedger(journal)
    print(f"\nReopened from {journal.name}: "
          f"{reopened.event_count()} events survive a restart")
    print("Leaderboard:")
    for row in reopened.leaderboard(limit=10):
        print(f"  {row.user_id:<4} {row.total_points:>3} pts")


if __name__ == "__main__":
    main()
