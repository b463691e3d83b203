def __getattr__(name: str):
    if name == "Device":
        from acoustic_microgen._base import Device

        return Device

    elif name in ("parse_device", "parse_measured", "load_bundled"):
        import acoustic_microgen.devicefile as devicefile

        return getattr(devicefile, name)

    elif name in ("Command", "run_command"):
        import acoustic_microgen.commands as commands

        return getattr(commands, name)

    elif name in ("match_frequency", "maximize_emf", "consistency_report"):
        import acoustic_microgen.design as design

        return getattr(design, name)

    else:
        raise AttributeError(name)


__all__ = [
    "Command",
    "Device",
    "consistency_report",
    "load_bundled",
    "match_frequency",
    "maximize_emf",
    "parse_device",
    "parse_measured",
    "run_command",
]
