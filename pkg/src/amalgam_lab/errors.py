class LabError(ValueError):
    """Contract violation raised by the lab.

    ``code`` is a short kebab-case identifier (``"ball-outside-domain"``,
    ``"empty-family"``, ...) so callers and the CLI can branch on the failure
    kind without parsing messages.
    """

    def __init__(self, code, message=""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
