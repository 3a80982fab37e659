import hypothesis

# Numeric properties here can be slow on first compile of the hypothesis
# strategies; wall-clock deadlines only add flakiness.
hypothesis.settings.register_profile(
    "tracelab", deadline=None, max_examples=60, print_blob=True
)
hypothesis.settings.load_profile("tracelab")
