"""
分析流程 Prompt，包括：
- analyze_game: 对一个目录博弈依次做静态与动态分析
- design_experiment: 按研究问题起草实验配置
"""

from prompts import RegretLab_Prompt


@RegretLab_Prompt(
    name="analyze_game",
    title="Analyze Game",
    description="引导对一个博弈做完整分析：均衡、劣势消去、curb 集合、Hannan 集合与无悔动力学的长期行为",
)
async def analyze_game(game: str = "fig3i", horizon: int = 100000) -> str:
    return f"""请对博弈 `{game}` 做一次完整分析，按顺序调用工具并在每一步总结结论：

1. `game_info(game="{game}")`：列出收益表、Ū、纳什均衡、严格劣势消去结果与 curb 集合。
2. 对每个非全集的 curb 集合 B，调用 `curb_constants` 得到 δ_B 与 γ_B（策略用 rm）。
3. 用 `simulate_dynamics(game="{game}", horizon={horizon}, strategy_1="rm", limit_set=True)`
   运行遗憾匹配，报告最终 R_max、信念与极限集分类（ne_proximal / cycling / unclassified）。
4. 用 `hannan_check` 检查最终的相关行动 z 属于 Hannan 集合的哪一部分。
5. 用同样的初始条件调用 `integrate_cfp`，比较连续虚拟博弈的守恒残差与离散结果。

最后说明：动力学是否收敛到纳什均衡、在 curb 集合中停留，还是在极限环上循环。"""


@RegretLab_Prompt(
    name="design_experiment",
    title="Design Experiment",
    description="根据研究问题起草一个 regretlab 实验配置（YAML）",
)
async def design_experiment(question: str, game: str = "matching_pennies") -> str:
    return f"""研究问题：{question}

请为博弈 `{game}` 起草一个实验配置文件，格式为只有一层分节的 YAML：

```yaml
experiment:
  name: <实验名>
  game: {game}
dynamics:
  dynamics: stochastic      # stochastic | expected | dfp | cfp | cont_noregret
  strategy_1: rm            # rm | lp:<p> | expw:<alpha> | fp
  fallback_1: const:0       # const:<c> | br
  horizon: 100000
  runs: 50
  seed: 1
  schedule: 1.1             # 几何记录比例，或 every
analysis:
  analyses: hannan, limit_set
  regret_threshold: 0.05
```

说明每个字段的选择理由，然后用 `run_experiment_tool` 运行并解读 summary.json 中的 aggregate。"""
