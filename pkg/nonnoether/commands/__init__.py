def register_commands(app):
    from .check import check_cmd
    from .invariants import invariants_cmd
    from .verify import verify_cmd
    from .involution import involution_cmd
    from .report import report_cmd

    app.cli.add_command(check_cmd)
    app.cli.add_command(invariants_cmd)
    app.cli.add_command(verify_cmd)
    app.cli.add_command(involution_cmd)
    app.cli.add_command(report_cmd)
