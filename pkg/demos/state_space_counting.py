"""Compare the propositional pick/place state space with the per-graph AND/OR template.

Run with ``python demos/state_space_counting.py``.
"""

from tmp_idan.andor import TEMPLATE_SIZE
from tmp_idan.baseline import enumerate_state_space, shortest_task_plan

print(f"{'K':>2} {'props':>6} {'states':>8} {'consistent':>10} {'plan':>5} {'expanded':>9} {'and/or':>7}")
for k in range(1, 11):
    size = enumerate_state_space(k)
    # worst case: every object blocked except the last one in the chain
    worst = shortest_task_plan(k, blocked=set(range(k - 1)))
    andor = TEMPLATE_SIZE * max(1, k - 1)
    print(f"{k:>2} {size.propositions:>6} {size.states:>8} {size.mutex_consistent:>10} "
          f"{worst.length:>5} {worst.expansions:>9} {andor:>7}")

print("\nK=6 worst-case plan:", " -> ".join(shortest_task_plan(6, {0, 1, 2, 3, 4}).plan))
